use serde::{Deserialize, Serialize};

use super::{check_horizon, run_blocks, Moments, SimConfig};
use crate::error::{Error, Result};
use crate::increments::IncrementModel;

/// Bound on the crossing chance left behind when a path is declared
/// never to cross the line.
pub const RENEWAL_REMAINDER: f64 = 1e-4;

/// Drift `c` of the line `R + nc`: half the mean, strictly between the
/// mean and zero.
pub fn renewal_drift(model: &IncrementModel) -> Result<f64> {
    let mean = model.mean()?;
    if mean >= 0.0 {
        return Err(Error::Drift(mean));
    }
    Ok(if mean.is_finite() { mean / 2.0 } else { -1.0 })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RenewalRow {
    pub r: f64,
    /// Estimate of `δ = P(τ1 < ∞)`, `τ1 = min{n ≥ 1 : S_n > R + nc}`.
    pub delta: f64,
    pub delta_stderr: f64,
    pub delta_bias_bound: f64,
    /// Estimate of `Φ_R = E[e^{γS_{τ1}}; τ1 < ∞]`; absent outside the class.
    pub phi: Option<f64>,
    pub phi_stderr: Option<f64>,
    pub phi_bias_bound: Option<f64>,
    pub undecided: u64,
}

/// Conditional Monte Carlo for the first crossing of the line `R + nc`.
///
/// At each step the crossing chance `P(ξ > u)`, `u = R + nc − S_{n−1}`, and
/// the twisted crossing mass `e^{γS_{n−1}}·E[e^{γξ}; ξ > u]` are added
/// exactly; the path then continues on the non-crossing event with weight
/// `P(ξ ≤ u)`. A path stops once `S_n − nc < R − K_r`, where `K_r` makes the
/// remaining crossing chance at most `1e-4` via the exponent `γ' = γ/2`.
pub fn renewal_diagnostics(model: &IncrementModel, r_grid: &[f64], cfg: &SimConfig) -> Result<Vec<RenewalRow>> {
    let c = renewal_drift(model)?;
    let gamma = model.gamma();
    let base = match gamma {
        Some(g) => g,
        None => model
            .drift_exponent()
            .map(|(alpha, _)| alpha)
            .ok_or_else(|| Error::Regime(format!("{model}: no exponential moment below one")))?,
    };
    let gamma_p = base / 2.0;
    // S_n − nc is a walk with increments ξ − c; with E e^{γ'(ξ−c)} ≤ 1 its
    // supremum exceeds y with probability at most e^{-γ'y}.
    let lundberg = model.mgf(gamma_p)?.value * (-gamma_p * c).exp();
    if !(lundberg <= 1.0) {
        return Err(Error::Regime(format!(
            "E e^{{γ'(ξ−c)}} = {lundberg} > 1 at γ' = {gamma_p}"
        )));
    }
    let k_r = -RENEWAL_REMAINDER.ln() / gamma_p;
    let phi_hat = model.phi_hat();

    r_grid
        .iter()
        .map(|&r| {
            let blocks = run_blocks(cfg, |rng, paths| {
                let (mut d, mut p, mut pb) = (Moments::default(), Moments::default(), Moments::default());
                let mut undecided = 0u64;
                for _ in 0..paths {
                    let (mut s, mut w, mut delta, mut phi) = (0.0f64, 1.0f64, 0.0, 0.0);
                    let mut decided = false;
                    let mut n = 0usize;
                    while n < cfg.horizon_cap {
                        n += 1;
                        let u = r + n as f64 * c - s;
                        let cross = model.tail(u);
                        delta += w * cross;
                        if let (Some(g), Some(tt)) = (gamma, model.tilted_tail(u)) {
                            phi += w * (g * s).exp() * tt;
                        }
                        if cross >= 1.0 {
                            w = 0.0;
                            decided = true;
                            break;
                        }
                        w *= 1.0 - cross;
                        s += model
                            .sample_below(u, rng)
                            .expect("non-crossing event has positive probability");
                        if s - n as f64 * c < r - k_r {
                            decided = true;
                            break;
                        }
                    }
                    undecided += !decided as u64;
                    d.push(delta);
                    p.push(phi);
                    // From S_n = s the remaining twisted mass is at most
                    // Σ_m E e^{γ(s + S_m)} = e^{γs}·φ̂/(1 − φ̂).
                    if let (Some(g), Some(ph)) = (gamma, phi_hat) {
                        pb.push(w * (g * s).exp() * ph / (1.0 - ph));
                    }
                }
                (d, p, pb, undecided)
            })?;
            let (mut d, mut p, mut pb, mut undecided) = (Moments::default(), Moments::default(), Moments::default(), 0);
            for (bd, bp, bpb, bu) in &blocks {
                d.merge(bd);
                p.merge(bp);
                pb.merge(bpb);
                undecided += bu;
            }
            check_horizon(undecided, cfg.n_paths)?;
            let in_class = gamma.is_some();
            Ok(RenewalRow {
                r,
                delta: d.mean(),
                delta_stderr: d.stderr(),
                delta_bias_bound: RENEWAL_REMAINDER,
                phi: in_class.then(|| p.mean()),
                phi_stderr: in_class.then(|| p.stderr()),
                phi_bias_bound: in_class.then(|| pb.mean()),
                undecided,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn point_mass_never_crosses() {
        let m = IncrementModel::point_mass(-1.0).unwrap();
        assert_eq!(renewal_drift(&m).unwrap(), -0.5);
        let rows = renewal_diagnostics(&m, &[1.0], &SimConfig::new(100, 0)).unwrap();
        assert_eq!(rows[0].delta, 0.0);
        assert!(rows[0].phi.is_none());
    }

    #[test]
    fn reference_trends() {
        let m = IncrementModel::reference();
        let rows = renewal_diagnostics(&m, &[2.0, 4.0, 8.0], &SimConfig::new(20_000, 0)).unwrap();
        for w in rows.windows(2) {
            assert!(w[1].delta < w[0].delta);
            assert!(w[1].phi.unwrap() < w[0].phi.unwrap());
        }
        assert!(rows.iter().all(|r| r.undecided == 0));
    }
}
