//! Numerical membership diagnostics: the local shift ratio
//! `P(ξ > x − k)/P(ξ > x) → e^{γk}` and the middle-range convolution
//! integral `I(x) = (1/P(ξ > x)) ∫_{h(x)}^{x−h(x)} P(ξ > x − y) dF(y) → 0`.

use serde::Serialize;

use super::{HChoice, IncrementModel, LOG_DOMAIN_THRESHOLD};
use crate::error::Result;
use crate::quadrature;

/// Relative deviation below which the shift-ratio check passes at the
/// largest `x`.
pub const LGAMMA_PASS_TOL: f64 = 1e-2;

#[derive(Debug, Clone, Serialize)]
pub struct LgammaRow {
    pub k: f64,
    pub x: f64,
    pub ratio: f64,
    pub target: f64,
    /// `ratio − e^{γk}`.
    pub deviation: f64,
    /// `ratio / e^{γk} − 1`.
    pub rel_deviation: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LgammaReport {
    pub not_in_class: bool,
    /// Set when some evaluation needed the log-domain form of the tail.
    pub log_domain: bool,
    pub rows: Vec<LgammaRow>,
    pub max_abs_deviation: f64,
    pub max_rel_deviation: f64,
    pub passed: bool,
}

pub fn lgamma_diagnostic(model: &IncrementModel, ks: &[f64], xs: &[f64]) -> LgammaReport {
    let Some(gamma) = model.gamma() else {
        return LgammaReport {
            not_in_class: true,
            log_domain: false,
            rows: Vec::new(),
            max_abs_deviation: f64::NAN,
            max_rel_deviation: f64::NAN,
            passed: true,
        };
    };
    let mut xs = xs.to_vec();
    xs.sort_by(f64::total_cmp);
    let mut rows = Vec::with_capacity(ks.len() * xs.len());
    let mut log_domain = false;
    for &k in ks {
        for &x in &xs {
            if gamma * x.abs().max((x - k).abs()) > LOG_DOMAIN_THRESHOLD {
                log_domain = true;
            }
            let ratio = (model.log_tail(x - k) - model.log_tail(x)).exp();
            let target = (gamma * k).exp();
            rows.push(LgammaRow {
                k,
                x,
                ratio,
                target,
                deviation: ratio - target,
                rel_deviation: ratio / target - 1.0,
            });
        }
    }
    let largest = xs.last().copied().unwrap_or(f64::NAN);
    let at_largest = rows.iter().filter(|r| r.x == largest);
    let max_abs_deviation = at_largest.clone().map(|r| r.deviation.abs()).fold(0.0, f64::max);
    let max_rel_deviation = at_largest.map(|r| r.rel_deviation.abs()).fold(0.0, f64::max);

    let trending = ks.iter().all(|&k| {
        let devs: Vec<f64> = rows
            .iter()
            .filter(|r| r.k == k)
            .map(|r| r.rel_deviation.abs())
            .collect();
        devs.windows(2).all(|w| w[1] < w[0] || w[1] == 0.0)
    });
    LgammaReport {
        not_in_class: false,
        log_domain,
        rows,
        max_abs_deviation,
        max_rel_deviation,
        passed: trending && max_rel_deviation < LGAMMA_PASS_TOL,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SgammaRow {
    pub x: f64,
    pub h: f64,
    pub integral: f64,
    pub quadrature_error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SgammaReport {
    pub not_in_class: bool,
    pub h_choice: HChoice,
    pub rows: Vec<SgammaRow>,
    /// `I(x)` strictly decreasing along the grid (or identically zero).
    pub decreasing: bool,
}

pub fn sgamma_diagnostic(model: &IncrementModel, h_choice: HChoice, xs: &[f64]) -> Result<SgammaReport> {
    let mut xs = xs.to_vec();
    xs.sort_by(f64::total_cmp);
    let mut rows = Vec::with_capacity(xs.len());
    for &x in &xs {
        let h = h_choice.apply(x);
        let (integral, quadrature_error) = match model.atoms() {
            Some(atoms) => (atom_integral(model, &atoms, x, h), 0.0),
            None => {
                let log_tx = model.log_tail(x);
                let q = quadrature::integrate(
                    |y| {
                        let dens = model.density(y).unwrap_or(0.0);
                        if dens <= 0.0 {
                            0.0
                        } else {
                            (dens.ln() + model.log_tail(x - y) - log_tx).exp()
                        }
                    },
                    h,
                    x - h,
                    quadrature::DEFAULT_ABS_TOL,
                )?;
                (q.value, q.error)
            }
        };
        rows.push(SgammaRow {
            x,
            h,
            integral,
            quadrature_error,
        });
    }
    let all_zero = rows.iter().all(|r| r.integral == 0.0);
    let decreasing = all_zero || rows.windows(2).all(|w| w[1].integral < w[0].integral);
    Ok(SgammaReport {
        not_in_class: !model.in_class(),
        h_choice,
        rows,
        decreasing,
    })
}

fn atom_integral(model: &IncrementModel, atoms: &[(f64, f64)], x: f64, h: f64) -> f64 {
    let numerator: f64 = atoms
        .iter()
        .filter(|(v, _)| *v >= h && *v <= x - h)
        .map(|(v, p)| p * model.tail(x - v))
        .sum();
    if numerator == 0.0 {
        0.0
    } else {
        numerator / model.tail(x)
    }
}
