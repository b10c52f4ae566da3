use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::increments::IncrementModel;
use crate::interval::Interval;
use crate::lattice::{MaxLaw, PartialSumLaw, StoppedLaw};

/// The constant `C = E e^{γM}/(1 − φ̂)` of `P(M > x) ~ C·P(ξ > x)`, with
/// its a-priori bracket `[1/(1 − φ̂), 1/(1 − φ̂)²]` coming from
/// `1 ≤ E e^{γM} ≤ 1/(1 − φ̂)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticConstants {
    pub gamma: f64,
    pub phg: f64,
    pub exp_moment_m: Interval,
    pub c: Interval,
    pub c_lo: f64,
    pub c_hi: f64,
}

impl AsymptoticConstants {
    pub fn from_parts(gamma: f64, phg: f64, exp_moment_m: Interval) -> Result<Self> {
        if !(gamma > 0.0) {
            return Err(Error::Param {
                name: "gamma",
                reason: format!("must be positive, got {gamma}"),
            });
        }
        if !(phg > 0.0 && phg < 1.0) {
            return Err(Error::Regime(format!("φ̂ = {phg} outside (0, 1)")));
        }
        let scale = 1.0 / (1.0 - phg);
        Ok(AsymptoticConstants {
            gamma,
            phg,
            exp_moment_m,
            c: exp_moment_m.scale(scale),
            c_lo: scale,
            c_hi: scale * scale,
        })
    }

    /// Whether the certified interval of `C` lies inside the a-priori
    /// bracket.
    pub fn within_bracket(&self) -> bool {
        self.c.lo >= self.c_lo * (1.0 - 1e-12) && self.c.hi <= self.c_hi * (1.0 + 1e-12)
    }
}

/// Constants for an in-class model from the lattice law of `M`.
pub fn constants(model: &IncrementModel, max_law: &MaxLaw) -> Result<AsymptoticConstants> {
    model.require_theorem_regime()?;
    let gamma = model.gamma().expect("in class");
    let phg = model.phi_hat().expect("in class");
    let moment = max_law.exp_moment(gamma)?;
    AsymptoticConstants::from_parts(gamma, phg, moment)
}

/// `C(1 − e^{-γt})`, the constant of `P(M ∈ (x, x + t]) ~ C(1 − e^{-γt})·P(ξ > x)`;
/// `t = ∞` gives `C`.
pub fn local_constant(consts: &AsymptoticConstants, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::Param {
            name: "t",
            reason: format!("window must be positive, got {t}"),
        });
    }
    Ok(consts.c.value * -(-consts.gamma * t).exp_m1())
}

/// `Σ_{n=1}^N φ̂^{n−1}·E e^{γM_{N−n}}` from the laws of `M_0, …, M_{N−1}`.
pub fn finite_constant(model: &IncrementModel, n: usize, horizon_laws: &[MaxLaw]) -> Result<Interval> {
    let gamma = model
        .gamma()
        .ok_or_else(|| Error::Regime(format!("{model} is not in the twisted class")))?;
    let phg = model.phi_hat().expect("in class");
    if n == 0 {
        return Err(Error::Param {
            name: "N",
            reason: "must be ≥ 1".into(),
        });
    }
    if horizon_laws.len() < n {
        return Err(Error::Param {
            name: "horizon_laws",
            reason: format!("need the laws of M_0..M_{}, got {}", n - 1, horizon_laws.len()),
        });
    }
    let mut total = Interval::exact(0.0);
    for k in 1..=n {
        let law = &horizon_laws[n - k];
        if law.horizon != Some(n - k) {
            return Err(Error::Param {
                name: "horizon_laws",
                reason: format!("entry {} is not M_{}", n - k, n - k),
            });
        }
        total = total.add(&law.exp_moment(gamma)?.scale(phg.powi(k as i32 - 1)));
    }
    Ok(total)
}

/// Certified bound on `C − finite_constant(N)`:
/// `(E e^{γM} + N)·φ̂^N/(1 − φ̂)`. The `N` term accounts for the laws of
/// `M_{N−n}` that have not yet converged, using
/// `E e^{γM} − E e^{γM_m} ≤ φ̂^{m+1}/(1 − φ̂)`.
pub fn finite_constant_remainder(consts: &AsymptoticConstants, n: usize) -> f64 {
    (consts.exp_moment_m.hi + n as f64) * consts.phg.powi(n as i32) / (1.0 - consts.phg)
}

/// `(1 − E e^{-γχ})·C` from the stopped law; mass whose undershoot is not
/// resolved widens the interval.
pub fn stopped_constant(consts: &AsymptoticConstants, stopped: &StoppedLaw) -> Result<Interval> {
    let chi = &stopped.chi;
    if chi.probs.iter().skip(1).all(|p| *p == 0.0) {
        return Err(Error::Domain("degenerate undershoot χ ≡ 0".into()));
    }
    let laplace = chi.exp_moment(-consts.gamma)?.value;
    let unresolved = stopped.chi_escape + stopped.residual;
    let factor = Interval::new(1.0 - laplace, (1.0 - laplace - unresolved).max(0.0), 1.0 - laplace);
    Ok(Interval::new(
        factor.value * consts.c.value,
        factor.lo * consts.c.lo,
        factor.hi * consts.c.hi,
    ))
}

/// One row of [`lambda_partial_sums`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaRow {
    pub n: usize,
    pub a: f64,
    /// `Σ_{k=1}^n λ(k, a)`.
    pub sum: f64,
    /// `Σ_{k=1}^n φ̂^{k−1}`, the limit as `a → ∞`.
    pub finite_target: f64,
    /// `1/(1 − φ̂)`.
    pub limit: f64,
}

/// Partial sums of `λ(n, a) = E[e^{γS_{n−1}}; S_{n−1} ≤ a] − P(M > a)e^{γa}`
/// for each `a` and each `n` in `ns`. `step_laws[j]` is the law of `S_j`.
pub fn lambda_partial_sums(
    model: &IncrementModel,
    ns: &[usize],
    a_grid: &[f64],
    step_laws: &[PartialSumLaw],
    max_law: &MaxLaw,
) -> Result<Vec<LambdaRow>> {
    let gamma = model
        .gamma()
        .ok_or_else(|| Error::Regime(format!("{model} is not in the twisted class")))?;
    let phg = model.phi_hat().expect("in class");
    let n_max = ns.iter().copied().max().unwrap_or(0);
    if step_laws.len() < n_max {
        return Err(Error::Param {
            name: "step_laws",
            reason: format!("need {n_max} laws, got {}", step_laws.len()),
        });
    }
    let mut rows = Vec::with_capacity(ns.len() * a_grid.len());
    for &a in a_grid {
        for law in &step_laws[..n_max] {
            let covered = (law.min_index + law.probs.len() as i64 - 1) as f64 * law.step;
            if a > covered + law.step / 2.0 {
                return Err(Error::Domain(format!("a = {a} beyond the lattice span ({covered})")));
            }
        }
        if a > max_law.top() {
            return Err(Error::Domain(format!("a = {a} beyond the grid top {}", max_law.top())));
        }
        let subtrahend = max_law.tail(a) * (gamma * max_law.snap(a)).exp();
        let mut sum = 0.0;
        let mut n_done = 0;
        let mut targets: Vec<usize> = ns.to_vec();
        targets.sort_unstable();
        for n in targets {
            while n_done < n {
                sum += step_laws[n_done].twisted_mass_below(a, gamma) - subtrahend;
                n_done += 1;
            }
            let finite_target = (0..n).map(|k| phg.powi(k as i32)).sum();
            rows.push(LambdaRow {
                n,
                a,
                sum,
                finite_target,
                limit: 1.0 / (1.0 - phg),
            });
        }
    }
    Ok(rows)
}

/// A summand law `F_i` with `P(ξ_i > x) ~ c_i·T(x)` and `φ̂(F_i)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailComponent {
    pub phi_hat: f64,
    pub c: f64,
}

/// `Π_i φ̂(F_i)·Σ_i c_i/φ̂(F_i)`: the predicted ratio of the tail of
/// `F_1 * … * F_n` to `T(x)`.
pub fn convolution_prediction(components: &[TailComponent]) -> Result<f64> {
    if components.is_empty() {
        return Err(Error::Param {
            name: "models",
            reason: "empty list".into(),
        });
    }
    if let Some(bad) = components.iter().find(|t| !(t.phi_hat.is_finite() && t.phi_hat > 0.0)) {
        return Err(Error::Regime(format!("φ̂ = {} is not finite and positive", bad.phi_hat)));
    }
    let product: f64 = components.iter().map(|t| t.phi_hat).product();
    let weights: f64 = components.iter().map(|t| t.c / t.phi_hat).sum();
    Ok(product * weights)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{default_span, discretize, finite_horizon, lindley_fixed_point, DEFAULT_TOL};

    fn reference_consts() -> AsymptoticConstants {
        AsymptoticConstants::from_parts(1.0, 0.5, Interval::new(1.18, 1.18, 1.18)).unwrap()
    }

    #[test]
    fn degenerate_maximum() {
        let c = AsymptoticConstants::from_parts(1.0, 0.5, Interval::exact(1.0)).unwrap();
        assert_eq!(c.c.value, 2.0);
        assert_eq!((c.c_lo, c.c_hi), (2.0, 4.0));
    }

    #[test]
    fn reference_constant_inside_bracket() {
        let m = IncrementModel::reference();
        let pmf = discretize(&m, 0.02, default_span(&m, 0.02), false).unwrap();
        let law = lindley_fixed_point(&pmf, DEFAULT_TOL).unwrap();
        let c = constants(&m, &law).unwrap();
        assert!(c.c.lo > 2.0 && c.c.hi < 4.0);
        assert!(c.within_bracket());
    }

    #[test]
    fn lattice_models_are_refused() {
        let m = IncrementModel::two_point(1.0, 0.25, -1.0).unwrap();
        let pmf = discretize(&m, 1.0, default_span(&m, 1.0), false).unwrap();
        let law = lindley_fixed_point(&pmf, DEFAULT_TOL).unwrap();
        assert!(constants(&m, &law).is_err());
    }

    #[test]
    fn local_constant_examples() {
        let c = AsymptoticConstants::from_parts(1.0, 0.5, Interval::exact(1.0)).unwrap();
        assert_eq!(local_constant(&c, f64::INFINITY).unwrap(), 2.0);
        assert!((local_constant(&c, 2f64.ln()).unwrap() - 1.0).abs() < 1e-15);
        assert!(local_constant(&c, 0.0).is_err());
        let c = reference_consts();
        for (t1, t2) in [(0.3, 1.1), (1.0, 1.0), (2.5, 0.01)] {
            let lhs = local_constant(&c, t1).unwrap() + (-t1).exp() * local_constant(&c, t2).unwrap();
            assert!((lhs - local_constant(&c, t1 + t2).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn finite_constant_small_horizons() {
        let m = IncrementModel::reference();
        let pmf = discretize(&m, 0.02, default_span(&m, 0.02), false).unwrap();
        let laws = finite_horizon(&pmf, 2).unwrap();
        assert_eq!(finite_constant(&m, 1, &laws).unwrap().value, 1.0);
        let e1 = laws[1].exp_moment(1.0).unwrap().value;
        assert!((finite_constant(&m, 2, &laws).unwrap().value - (e1 + 0.5)).abs() < 1e-14);
        assert!(finite_constant(&m, 5, &laws).is_err());
    }

    #[test]
    fn finite_constant_increases_to_c() {
        let m = IncrementModel::reference();
        let pmf = discretize(&m, 0.02, default_span(&m, 0.02), false).unwrap();
        let laws = finite_horizon(&pmf, 60).unwrap();
        let c = constants(&m, &lindley_fixed_point(&pmf, DEFAULT_TOL).unwrap()).unwrap();
        let seq: Vec<f64> = (1..=60).map(|n| finite_constant(&m, n, &laws).unwrap().value).collect();
        for (i, w) in seq.windows(2).enumerate() {
            // Nondecreasing up to summation rounding once M_n has converged.
            assert!(w[1] >= w[0] * (1.0 - 1e-12), "N={}: {} < {}", i + 2, w[1], w[0]);
        }
        for (i, v) in seq.iter().enumerate() {
            let n = i as i32 + 1;
            assert!(*v <= c.c.hi);
            assert!(c.c.value - v <= finite_constant_remainder(&c, n as usize));
        }
        // φ̂^N < 1e-3 from N = 10 on.
        assert!(seq[9] / c.c.value > 0.99, "{} vs {:?}", seq[9], c.c);
    }

    #[test]
    fn stopped_constant_limits() {
        use crate::lattice::{stopped_max_sigma1, LatticePmf};
        let c = reference_consts();
        let pmf = LatticePmf::dirac(1.0, -1);
        let s = stopped_max_sigma1(&pmf, 10, &[]).unwrap();
        let v = stopped_constant(&c, &s).unwrap();
        assert!((v.value - (1.0 - (-1f64).exp()) * c.c.value).abs() < 1e-15);
        let far = LatticePmf::dirac(1.0, -20);
        let v = stopped_constant(&c, &stopped_max_sigma1(&far, 10, &[]).unwrap()).unwrap();
        assert!((v.value / c.c.value - 1.0).abs() < 1e-8);
        assert!(v.value < c.c.value);
    }

    #[test]
    fn lambda_sum_first_term() {
        use crate::lattice::partial_sum_laws;
        let m = IncrementModel::reference();
        let pmf = discretize(&m, 0.02, default_span(&m, 0.02), false).unwrap();
        let law = lindley_fixed_point(&pmf, DEFAULT_TOL).unwrap();
        let steps = partial_sum_laws(&pmf, 3, -30.0, 20.0).unwrap();
        let rows = lambda_partial_sums(&m, &[1, 3], &[5.0, 20.0], &steps, &law).unwrap();
        // λ(1, a) = 1 − P(M > a)e^{γa} → 1.
        let r1: Vec<f64> = rows.iter().filter(|r| r.n == 1).map(|r| r.sum).collect();
        assert!(r1[0] < r1[1] && r1[1] < 1.0 && r1[1] > 0.99);
        for r in &rows {
            assert!(r.sum <= r.finite_target * (1.0 + 1e-9));
        }
        assert!(lambda_partial_sums(&m, &[1], &[60.0], &steps, &law).is_err());
    }

    #[test]
    fn convolution_predictions() {
        let one = TailComponent { phi_hat: 0.5, c: 1.0 };
        assert_eq!(convolution_prediction(&[one]).unwrap(), 1.0);
        assert_eq!(convolution_prediction(&[one, one]).unwrap(), 1.0);
        assert!((convolution_prediction(&[one, one, one]).unwrap() - 0.75).abs() < 1e-15);
        let bad = TailComponent {
            phi_hat: f64::INFINITY,
            c: 1.0,
        };
        assert!(convolution_prediction(&[one, bad]).is_err());
    }
}
