use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::increments::{bisect_increasing_root, IncrementModel};

/// Folded mass above which `discretize` refuses without `allow_fold`.
pub const FOLD_LIMIT: f64 = 1e-6;
/// Normalisation tolerance of a lattice law.
pub const NORM_TOL: f64 = 1e-12;
/// Target for the certified bound on `P(M > top)` when choosing grid tops.
pub const TOP_TAIL_TARGET: f64 = 1e-16;

/// A certified exponential bound on the tail of the maximum of the walk
/// driven by a law, carried along with lattice laws so that truncation of
/// the grid can be bounded.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TailCertificate {
    /// `P(M > t) ≤ e^{-γt}/(1 − φ̂)`; also enables the balance identity for
    /// `E e^{γM}`.
    Twisted {
        gamma: f64,
        phi_hat: f64,
    },
    /// `P(M > t) ≤ e^{-rate·t}`; an infinite rate means `M ≡ 0`.
    Exponential {
        rate: f64,
    },
    None,
}

impl TailCertificate {
    pub fn from_model(model: &IncrementModel) -> Self {
        if let (Some(gamma), Some(phi_hat)) = (model.gamma(), model.phi_hat()) {
            if phi_hat < 1.0 {
                return TailCertificate::Twisted { gamma, phi_hat };
            }
            return TailCertificate::None;
        }
        if model.support_max() <= 0.0 && model.support_min() < 0.0 {
            return TailCertificate::Exponential { rate: f64::INFINITY };
        }
        match model.lundberg_root() {
            Some(rate) => TailCertificate::Exponential { rate },
            None => TailCertificate::None,
        }
    }

    /// Upper bound on `P(M > t)`.
    pub fn bound(&self, t: f64) -> f64 {
        if t < 0.0 {
            return 1.0;
        }
        match *self {
            TailCertificate::Twisted { gamma, phi_hat } => ((-gamma * t).exp() / (1.0 - phi_hat)).min(1.0),
            TailCertificate::Exponential { rate } if rate.is_infinite() => 0.0,
            TailCertificate::Exponential { rate } => (-rate * t).exp().min(1.0),
            TailCertificate::None => 1.0,
        }
    }

    /// Smallest `t` with `bound(t) ≤ target`, if the certificate decays.
    pub fn level_for(&self, target: f64) -> Option<f64> {
        match *self {
            TailCertificate::Twisted { gamma, phi_hat } => Some(((-(target * (1.0 - phi_hat)).ln()) / gamma).max(0.0)),
            TailCertificate::Exponential { rate } if rate.is_infinite() => Some(0.0),
            TailCertificate::Exponential { rate } => Some(-target.ln() / rate),
            TailCertificate::None => None,
        }
    }

    /// Decay rate of the bound.
    pub fn rate(&self) -> Option<f64> {
        match *self {
            TailCertificate::Twisted { gamma, .. } => Some(gamma),
            TailCertificate::Exponential { rate } => Some(rate),
            TailCertificate::None => None,
        }
    }
}

/// A probability vector on the lattice `{k·step : k = min_index, …}`.
///
/// Cell `k` represents the interval `((k − ½)h, (k + ½)h]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticePmf {
    pub step: f64,
    pub min_index: i64,
    pub probs: Vec<f64>,
    /// Mass below the span, folded into the first bin.
    pub mass_below: f64,
    /// Mass above the span, folded into the last bin.
    pub mass_above: f64,
    pub certificate: TailCertificate,
}

impl LatticePmf {
    /// Builds a law from raw probabilities, checking normalisation.
    pub fn new(step: f64, min_index: i64, probs: Vec<f64>) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::Param {
                name: "step",
                reason: format!("must be positive, got {step}"),
            });
        }
        if probs.is_empty() {
            return Err(Error::Param {
                name: "probs",
                reason: "empty support".into(),
            });
        }
        if let Some(p) = probs.iter().find(|p| !(**p >= 0.0 && p.is_finite())) {
            return Err(Error::Param {
                name: "probs",
                reason: format!("entry {p} is not a probability"),
            });
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > NORM_TOL {
            return Err(Error::Param {
                name: "probs",
                reason: format!("sum {total} differs from 1"),
            });
        }
        Ok(LatticePmf {
            step,
            min_index,
            probs,
            mass_below: 0.0,
            mass_above: 0.0,
            certificate: TailCertificate::None,
        })
    }

    /// Point mass at `index·step`.
    pub fn dirac(step: f64, index: i64) -> Self {
        LatticePmf {
            step,
            min_index: index,
            probs: vec![1.0],
            mass_below: 0.0,
            mass_above: 0.0,
            certificate: TailCertificate::None,
        }
    }

    pub fn with_certificate(mut self, certificate: TailCertificate) -> Self {
        self.certificate = certificate;
        self
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn max_index(&self) -> i64 {
        self.min_index + self.probs.len() as i64 - 1
    }

    /// Probability of lattice point `k`.
    pub fn prob(&self, k: i64) -> f64 {
        if k < self.min_index || k > self.max_index() {
            0.0
        } else {
            self.probs[(k - self.min_index) as usize]
        }
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .map(|(i, p)| p * (self.min_index + i as i64) as f64 * self.step)
            .sum()
    }

    /// `Σ_k p_k e^{α k h}`.
    pub fn mgf(&self, alpha: f64) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .map(|(i, p)| p * (alpha * (self.min_index + i as i64) as f64 * self.step).exp())
            .sum()
    }

    /// `P(index > j)`, summed from the top so that deep tails keep full
    /// relative precision.
    pub fn tail_index(&self, j: i64) -> f64 {
        if j >= self.max_index() {
            return 0.0;
        }
        let start = (j + 1 - self.min_index).max(0) as usize;
        self.probs[start..].iter().rev().sum()
    }

    /// `P(ξ > x)` on the lattice, where a point `kh` exceeds `x` iff `kh > x`.
    pub fn tail(&self, x: f64) -> f64 {
        self.tail_index(floor_index(x, self.step))
    }

    /// Reverse cumulative sums: entry `i` is `P(index ≥ min_index + i)`.
    pub fn tail_sums(&self) -> Vec<f64> {
        reverse_cumsum(&self.probs)
    }

    /// The certificate to use for the walk driven by this law: the one
    /// inherited from the model, or else the Lundberg bound of the lattice
    /// law itself.
    pub fn walk_certificate(&self) -> TailCertificate {
        if self.certificate != TailCertificate::None {
            return self.certificate;
        }
        if self.mean() >= 0.0 {
            return TailCertificate::None;
        }
        if self.max_index() <= 0 {
            return TailCertificate::Exponential { rate: f64::INFINITY };
        }
        let log_mgf = |r: f64| {
            let terms: Vec<f64> = self
                .probs
                .iter()
                .enumerate()
                .filter(|(_, p)| **p > 0.0)
                .map(|(i, p)| p.ln() + r * (self.min_index + i as i64) as f64 * self.step)
                .collect();
            let m = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            m + terms.iter().map(|t| (t - m).exp()).sum::<f64>().ln()
        };
        TailCertificate::Exponential {
            rate: bisect_increasing_root(log_mgf),
        }
    }

    pub fn check_step(&self, other: &LatticePmf) -> Result<()> {
        if (self.step - other.step).abs() > 1e-12 * self.step.max(other.step) {
            return Err(Error::StepMismatch(self.step, other.step));
        }
        Ok(())
    }
}

/// Largest `j` with `j·h ≤ x`, tolerant to rounding of exact multiples.
pub fn floor_index(x: f64, h: f64) -> i64 {
    (x / h + 1e-9).floor() as i64
}

/// Cell boundary `(j + ½)h` at which a lattice exceedance of `x` is
/// compared with a continuous tail.
pub fn snap(x: f64, h: f64) -> f64 {
    (floor_index(x, h) as f64 + 0.5) * h
}

pub(crate) fn reverse_cumsum(v: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; v.len()];
    let mut acc = 0.0;
    for i in (0..v.len()).rev() {
        acc += v[i];
        out[i] = acc;
    }
    out
}

/// Default lattice step: `0.01` for continuous laws, otherwise the coarsest
/// step from a fixed ladder on which every atom is a lattice point.
pub fn default_step(model: &IncrementModel) -> f64 {
    match model.atoms() {
        None => 0.01,
        Some(atoms) => [1.0, 0.5, 0.25, 0.2, 0.1, 0.05, 0.02, 0.01, 0.005, 0.001]
            .into_iter()
            .find(|h| atoms.iter().all(|(v, _)| ((v / h) - (v / h).round()).abs() < 1e-9))
            .unwrap_or(0.001),
    }
}

/// Grid top for laws of the maximum: the level at which the certified bound
/// on `P(M > top)` falls to `1e-16`.
pub fn default_top(model: &IncrementModel, h: f64) -> f64 {
    let cert = TailCertificate::from_model(model);
    let level = cert.level_for(TOP_TAIL_TARGET).unwrap_or(100.0);
    level.max(h)
}

/// Default discretisation span: from the lower support end to the grid top
/// of the maximum (continuous laws), or the atom range (lattice laws).
pub fn default_span(model: &IncrementModel, h: f64) -> (f64, f64) {
    match model.atoms() {
        Some(_) => (model.support_min(), model.support_max()),
        None => (model.support_min(), default_top(model, h)),
    }
}

/// Grid top for laws of the maximum that must resolve `P(M > x_max)`: at
/// least [`default_top`], and high enough that the certified bound at the
/// top is below `1e-6` of a lower bound on `P(M > x_max)`.
pub fn top_covering(model: &IncrementModel, h: f64, x_max: f64) -> f64 {
    let base = default_top(model, h);
    let scale = model.max_tail_lower_bound(x_max);
    let needed = if scale > 0.0 {
        TailCertificate::from_model(model)
            .level_for(1e-6 * scale)
            .unwrap_or(base)
    } else {
        base
    };
    base.max(needed).max(x_max + h)
}

/// Lattice law of `model` on step `h` covering increments up to `top`
/// (continuous laws) or the atom range (lattice laws).
pub fn lattice_for(model: &IncrementModel, h: f64, top: f64) -> Result<LatticePmf> {
    let span = match model.atoms() {
        Some(_) => default_span(model, h),
        None => (model.support_min(), top),
    };
    discretize(model, h, span, false)
}

/// Discretises `model` onto step `h` over `span = [lo, hi]`:
/// `p_k = P(ξ ∈ ((k−½)h, (k+½)h])`, computed as a difference of tails.
/// Mass outside the span is folded into the end bins; more than `1e-6` of
/// it is refused unless `allow_fold`.
pub fn discretize(model: &IncrementModel, h: f64, span: (f64, f64), allow_fold: bool) -> Result<LatticePmf> {
    let (lo, hi) = span;
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::Param {
            name: "h",
            reason: format!("must be positive, got {h}"),
        });
    }
    if !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::Param {
            name: "span",
            reason: format!("[{lo}, {hi}] is not a finite interval"),
        });
    }
    let kmin = cell_of(lo, h);
    let kmax = cell_of(hi, h);
    let edge = |k: i64| (k as f64 + 0.5) * h;
    let mut probs: Vec<f64> = (kmin..=kmax)
        .map(|k| (model.tail(edge(k - 1)) - model.tail(edge(k))).max(0.0))
        .collect();
    let mass_below = model.cdf(edge(kmin - 1));
    let mass_above = model.tail(edge(kmax));
    let folded = mass_below + mass_above;
    if folded > FOLD_LIMIT && !allow_fold {
        return Err(Error::Fold {
            folded,
            limit: FOLD_LIMIT,
        });
    }
    probs[0] += mass_below;
    *probs.last_mut().expect("non-empty span") += mass_above;
    Ok(LatticePmf {
        step: h,
        min_index: kmin,
        probs,
        mass_below,
        mass_above,
        certificate: TailCertificate::from_model(model),
    })
}

/// Index of the cell `((k−½)h, (k+½)h]` containing `x`.
fn cell_of(x: f64, h: f64) -> i64 {
    (x / h - 0.5 - 1e-9).ceil() as i64
}
