use std::io::Write;

use serde::{Deserialize, Serialize};

use super::kernel::Kernel;
use super::pmf::{floor_index, snap, LatticePmf, TailCertificate, TOP_TAIL_TARGET};
use crate::error::{Error, Result};
use crate::interval::Interval;

/// Default sup-norm tolerance of the fixed-point iteration.
pub const DEFAULT_TOL: f64 = 1e-13;
/// Default iteration cap.
pub const DEFAULT_MAX_ITER: usize = 1_000_000;
/// Largest geometric remainder left in the twisted moment of the all-time
/// maximum when the iteration stops.
pub const MOMENT_REMAINDER_TOL: f64 = 1e-10;
/// Relative size of the truncated-tail contribution above which a positive
/// exponential moment is refused.
pub const EXP_MOMENT_TOL: f64 = 1e-6;

/// Lattice law of a maximum (`M`, `M_n`) or of another nonnegative
/// quantity on the grid `{0, h, 2h, …, top}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaxLaw {
    pub step: f64,
    pub probs: Vec<f64>,
    /// Lattice mass that left the grid through its top.
    pub overflow: f64,
    /// Certified upper bound on the true probability of exceeding the top.
    pub trunc_bound: f64,
    pub certificate: TailCertificate,
    /// `Some(n)` for the law of `M_n`, `None` for the all-time maximum.
    pub horizon: Option<usize>,
    /// `E e^{γM}` from the balance identity, when the certificate is
    /// twisted.
    pub twisted_moment: Option<Interval>,
}

impl MaxLaw {
    /// The law of `M ≡ 0`.
    pub fn zero(step: f64) -> Self {
        MaxLaw {
            step,
            probs: vec![1.0],
            overflow: 0.0,
            trunc_bound: 0.0,
            certificate: TailCertificate::Exponential { rate: f64::INFINITY },
            horizon: Some(0),
            twisted_moment: None,
        }
    }

    pub fn top(&self) -> f64 {
        (self.probs.len() - 1) as f64 * self.step
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum::<f64>() + self.overflow
    }

    /// `P(law > j·h)`, including the overflow, summed from the top.
    pub fn tail_index(&self, j: i64) -> f64 {
        let start = (j + 1).max(0) as usize;
        let inside: f64 = if start >= self.probs.len() {
            0.0
        } else {
            self.probs[start..].iter().rev().sum()
        };
        inside + self.overflow
    }

    /// `P(law > x)`: grid point `kh` exceeds `x` iff `kh > x`. Compare with
    /// continuous quantities at [`MaxLaw::snap`]`(x)`.
    pub fn tail(&self, x: f64) -> f64 {
        self.tail_index(floor_index(x, self.step))
    }

    /// `P(x < law ≤ y)`, summed bin by bin.
    pub fn prob_between(&self, x: f64, y: f64) -> f64 {
        let from = (floor_index(x, self.step) + 1).max(0) as usize;
        let to = (floor_index(y, self.step) + 1).max(0) as usize;
        let to = to.min(self.probs.len());
        if from >= to {
            0.0
        } else {
            self.probs[from..to].iter().sum()
        }
    }

    /// Cell boundary corresponding to the lattice event `law > x`.
    pub fn snap(&self, x: f64) -> f64 {
        snap(x, self.step)
    }

    /// `E e^{α·law}` with a certified interval.
    ///
    /// * `α ≤ 0`: direct sum; overflow mass widens the interval.
    /// * `α = γ` on a twisted law: the balance-identity value. A direct sum
    ///   would miss a tail of order `1/top`, since `e^{γx}P(M ∈ dx)` decays
    ///   only polynomially.
    /// * `0 < α` otherwise: direct sum plus the certified truncated tail;
    ///   refused when that tail is not negligible.
    pub fn exp_moment(&self, alpha: f64) -> Result<Interval> {
        let direct: f64 = self
            .probs
            .iter()
            .enumerate()
            .map(|(k, p)| p * (alpha * k as f64 * self.step).exp())
            .sum();
        if alpha <= 0.0 {
            return Ok(Interval::new(
                direct,
                direct,
                direct + self.overflow * (alpha * self.top()).exp(),
            ));
        }
        if let TailCertificate::Twisted { gamma, .. } = self.certificate {
            if (alpha - gamma).abs() <= 1e-12 * gamma {
                return self.twisted_moment.ok_or_else(|| {
                    Error::Uncertified("E e^{γM} needs the balance identity; this law carries no twisted moment".into())
                });
            }
        }
        if self.trunc_bound == 0.0 && self.overflow == 0.0 {
            return Ok(Interval::exact(direct));
        }
        let rate =
            self.certificate.rate().filter(|r| *r > alpha).ok_or_else(|| {
                Error::Uncertified(format!("no tail certificate decaying faster than e^{{-{alpha}x}}"))
            })?;
        // E[e^{αM}; M > t] ≤ bound(t)·e^{αt}·r/(r − α) for an e^{-rt} bound.
        let top = self.top();
        let tail = self.certificate.bound(top) * (alpha * top).exp() * rate / (rate - alpha);
        if tail > EXP_MOMENT_TOL * direct {
            return Err(Error::Uncertified(format!(
                "truncated tail contributes up to {tail:e} against a sum of {direct:e}"
            )));
        }
        Ok(Interval::new(direct, direct, direct + tail))
    }

    /// Writes the law as CSV with columns `x, pmf, tail, trunc_bound`, where
    /// `tail` is `P(law > x)`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "x,pmf,tail,trunc_bound")?;
        let mut tails = super::pmf::reverse_cumsum(&self.probs);
        tails.push(0.0);
        for (k, p) in self.probs.iter().enumerate() {
            let tail = tails[k + 1] + self.overflow;
            writeln!(w, "{},{:e},{:e},{:e}", k as f64 * self.step, p, tail, self.trunc_bound)?;
        }
        Ok(())
    }
}

/// `E e^{α·law}` with a certified interval; see [`MaxLaw::exp_moment`].
pub fn exp_moment(law: &MaxLaw, alpha: f64) -> Result<Interval> {
    law.exp_moment(alpha)
}

#[derive(Debug, Clone, Copy)]
pub struct LindleyOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Grid top; defaults to the level where the certificate bound falls to
    /// `1e-16`.
    pub top: Option<f64>,
}

impl Default for LindleyOptions {
    fn default() -> Self {
        LindleyOptions {
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
            top: None,
        }
    }
}

/// The reflected recursion `V_{n+1} = reflect₀(V_n ⊛ p)` started from
/// `V_0 = δ₀`; `V_n` is exactly the lattice law of `M_n`.
pub struct ReflectedWalk<'a> {
    kernel: Kernel<'a>,
    step: f64,
    certificate: TailCertificate,
    law: Vec<f64>,
    overflow: f64,
    n: usize,
    /// `E e^{γM_n}` by `E_{n+1} = φ̂·E_n + E[1 − e^{γ(M_n+ξ)}; M_n + ξ ≤ 0]`.
    moment: f64,
}

impl<'a> ReflectedWalk<'a> {
    pub fn new(pmf: &'a LatticePmf, top: Option<f64>) -> Result<Self> {
        let mean = pmf.mean();
        if mean >= 0.0 {
            return Err(Error::Drift(mean));
        }
        let certificate = pmf.walk_certificate();
        let top = match top {
            Some(t) => t,
            None => certificate.level_for(TOP_TAIL_TARGET).ok_or_else(|| {
                Error::Uncertified("no tail certificate to choose the grid top; pass one explicitly".into())
            })?,
        };
        let bins = ((top / pmf.step).ceil() as usize).max(1) + 1;
        let mut law = vec![0.0; bins];
        law[0] = 1.0;
        Ok(ReflectedWalk {
            kernel: Kernel::new(pmf),
            step: pmf.step,
            certificate,
            law,
            overflow: 0.0,
            n: 0,
            moment: 1.0,
        })
    }

    pub fn iterations(&self) -> usize {
        self.n
    }

    /// Advances one step and returns the sup-norm change of the law.
    pub fn advance(&mut self) -> f64 {
        let d = self.balance_defect();
        let s = self.kernel.step_window(&self.law, 0);
        let mut next = s.inside;
        next[0] += s.below;
        let change = next
            .iter()
            .zip(&self.law)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        self.law = next;
        self.overflow += s.above;
        if let TailCertificate::Twisted { phi_hat, .. } = self.certificate {
            self.moment = phi_hat * self.moment + d;
        }
        self.n += 1;
        change
    }

    /// `E[1 − e^{γ(M_n + ξ)}; M_n + ξ ≤ 0]`, zero without a twisted
    /// certificate. Only states within `|min ξ|` of zero contribute.
    fn balance_defect(&self) -> f64 {
        let TailCertificate::Twisted { gamma, .. } = self.certificate else {
            return 0.0;
        };
        let kmin = self.kernel.kmin();
        let mut total = 0.0;
        for (i, &v) in self.law.iter().enumerate().take((-kmin).max(0) as usize + 1) {
            let i = i as i64;
            let mut inner = 0.0;
            for k in kmin..=(-i) {
                inner += self.kernel.p(k) * (-((gamma * (i + k) as f64 * self.step).exp_m1()));
            }
            total += v * inner;
        }
        total
    }

    /// Snapshot of the current law.
    pub fn law(&self, horizon: Option<usize>) -> MaxLaw {
        let top = (self.law.len() - 1) as f64 * self.step;
        let twisted_moment = match self.certificate {
            TailCertificate::Twisted { phi_hat, .. } => {
                // Overflowed paths are missing from the defect terms, each
                // of which lies in [0, 1].
                let mut hi = self.moment + self.overflow / (1.0 - phi_hat);
                if horizon.is_none() {
                    // e^{γM} ≤ e^{γM_n} + Σ_{k>n} e^{γS_k}.
                    hi += phi_hat.powi(self.n as i32 + 1) / (1.0 - phi_hat);
                }
                Some(Interval::new(self.moment, self.moment, hi))
            }
            _ => None,
        };
        MaxLaw {
            step: self.step,
            probs: self.law.clone(),
            overflow: self.overflow,
            trunc_bound: self.certificate.bound(top),
            certificate: self.certificate,
            horizon,
            twisted_moment,
        }
    }

    fn moment_remainder(&self) -> f64 {
        match self.certificate {
            TailCertificate::Twisted { phi_hat, .. } => phi_hat.powi(self.n as i32 + 1) / (1.0 - phi_hat),
            _ => 0.0,
        }
    }
}

/// Law of the all-time maximum by iterating the reflected recursion until
/// the sup-norm change falls below `tol`.
pub fn lindley_fixed_point(pmf: &LatticePmf, tol: f64) -> Result<MaxLaw> {
    lindley_fixed_point_with(
        pmf,
        &LindleyOptions {
            tol,
            ..LindleyOptions::default()
        },
    )
}

pub fn lindley_fixed_point_with(pmf: &LatticePmf, opts: &LindleyOptions) -> Result<MaxLaw> {
    let mut walk = ReflectedWalk::new(pmf, opts.top)?;
    let mut change = f64::INFINITY;
    while walk.iterations() < opts.max_iter {
        change = walk.advance();
        if change < opts.tol && walk.moment_remainder() < MOMENT_REMAINDER_TOL {
            return Ok(walk.law(None));
        }
    }
    Err(Error::NoConvergence {
        iterations: walk.iterations(),
        delta: change,
    })
}

/// Laws of `M_0, …, M_N` on the grid of the all-time maximum.
pub fn finite_horizon(pmf: &LatticePmf, n: usize) -> Result<Vec<MaxLaw>> {
    finite_horizon_with(pmf, n, None)
}

pub fn finite_horizon_with(pmf: &LatticePmf, n: usize, top: Option<f64>) -> Result<Vec<MaxLaw>> {
    let mut walk = ReflectedWalk::new(pmf, top)?;
    let mut laws = Vec::with_capacity(n + 1);
    laws.push(walk.law(Some(0)));
    for k in 1..=n {
        walk.advance();
        laws.push(walk.law(Some(k)));
    }
    Ok(laws)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::increments::IncrementModel;
    use crate::lattice::pmf::{default_span, discretize};

    fn two_point() -> LatticePmf {
        let m = IncrementModel::two_point(1.0, 0.25, -1.0).unwrap();
        discretize(&m, 1.0, default_span(&m, 1.0), false).unwrap()
    }

    fn reference(h: f64) -> LatticePmf {
        let m = IncrementModel::reference();
        discretize(&m, h, default_span(&m, h), false).unwrap()
    }

    #[test]
    fn gamblers_ruin() {
        let law = lindley_fixed_point(&two_point(), DEFAULT_TOL).unwrap();
        for k in 0..=20 {
            let got = law.tail_index(k - 1);
            assert!((got - 3f64.powi(-k as i32)).abs() < 1e-10, "k={k}");
        }
    }

    #[test]
    fn point_mass_max_is_zero() {
        let m = IncrementModel::point_mass(-1.0).unwrap();
        let pmf = discretize(&m, 1.0, default_span(&m, 1.0), false).unwrap();
        let law = lindley_fixed_point(&pmf, DEFAULT_TOL).unwrap();
        assert_eq!(law.probs[0], 1.0);
        assert_eq!(law.tail(0.0), 0.0);
        assert_eq!(law.exp_moment(1.0).unwrap(), Interval::exact(1.0));
    }

    #[test]
    fn positive_drift_is_refused() {
        let pmf = LatticePmf::new(1.0, -1, vec![0.25, 0.0, 0.75]).unwrap();
        assert!(matches!(lindley_fixed_point(&pmf, DEFAULT_TOL), Err(Error::Drift(_))));
    }

    #[test]
    fn fixed_point_property() {
        let pmf = reference(0.02);
        let law = lindley_fixed_point(&pmf, DEFAULT_TOL).unwrap();
        let mut walk = ReflectedWalk::new(&pmf, None).unwrap();
        walk.law = law.probs.clone();
        assert!(walk.advance() < DEFAULT_TOL);
        assert!((law.total() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn finite_horizon_examples() {
        let laws = finite_horizon(&two_point(), 2).unwrap();
        assert_eq!(laws[0].probs[0], 1.0);
        assert_eq!(laws[0].tail(0.0), 0.0);
        assert!((laws[1].tail(0.5) - 0.25).abs() < 1e-15);
        assert!((laws[2].tail(0.5) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn finite_horizon_monotone_towards_fixed_point() {
        let pmf = reference(0.02);
        let laws = finite_horizon(&pmf, 40).unwrap();
        let fixed = lindley_fixed_point(&pmf, DEFAULT_TOL).unwrap();
        for x in [2.0, 8.0, 14.0] {
            let seq: Vec<f64> = laws.iter().map(|l| l.tail(x)).collect();
            assert!(seq.windows(2).all(|w| w[1] >= w[0]), "x={x}");
            assert!(*seq.last().unwrap() <= fixed.tail(x) * (1.0 + 1e-9));
        }
    }

    #[test]
    fn exp_moment_within_lemma_bounds() {
        let law = lindley_fixed_point(&reference(0.01), DEFAULT_TOL).unwrap();
        let e = law.exp_moment(1.0).unwrap();
        assert!(e.lo > 1.0 && e.hi < 2.0, "{e:?}");
        assert!(e.width() < 1e-3);
        // The direct sum misses a tail of order 1/top.
        let direct: f64 = law
            .probs
            .iter()
            .enumerate()
            .map(|(k, p)| p * (k as f64 * 0.01).exp())
            .sum();
        assert!(direct < e.lo);
    }

    #[test]
    fn moments_of_finite_horizon_laws_increase() {
        let laws = finite_horizon(&reference(0.02), 30).unwrap();
        let m: Vec<f64> = laws.iter().map(|l| l.exp_moment(1.0).unwrap().value).collect();
        assert_eq!(m[0], 1.0);
        assert!(m.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn negative_exponent_on_point_law() {
        let law = MaxLaw {
            probs: vec![0.0, 1.0],
            horizon: None,
            ..MaxLaw::zero(1.0)
        };
        let e = law.exp_moment(-1.0).unwrap();
        assert!((e.value - (-1f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn lundberg_certified_moment() {
        let law = lindley_fixed_point(&two_point(), DEFAULT_TOL).unwrap();
        // P(M = k) = (2/3)·3^{-k}: E e^{αM} = (2/3)/(1 − e^{α}/3).
        let alpha = 0.5;
        let e = law.exp_moment(alpha).unwrap();
        let exact = (2.0 / 3.0) / (1.0 - alpha.exp() / 3.0);
        assert!(e.contains(exact) || (e.value - exact).abs() < 1e-12, "{e:?} vs {exact}");
        assert!(law.exp_moment(1.2).is_err());
    }

    #[test]
    fn grid_refinement_is_stable() {
        let coarse = lindley_fixed_point(&reference(0.01), DEFAULT_TOL).unwrap();
        let fine = lindley_fixed_point(&reference(0.005), DEFAULT_TOL).unwrap();
        let m = IncrementModel::reference();
        for x in [2.0, 6.0, 10.0, 14.0] {
            let rc = coarse.tail(x) / m.tail(coarse.snap(x));
            let rf = fine.tail(x) / m.tail(fine.snap(x));
            assert!(fine.tail(x) >= 1e-9);
            assert!((rc / rf - 1.0).abs() < 0.01, "x={x}: {rc} vs {rf}");
        }
    }

    #[test]
    fn csv_columns() {
        let law = lindley_fixed_point(&two_point(), DEFAULT_TOL).unwrap();
        let mut buf = Vec::new();
        law.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("x,pmf,tail,trunc_bound"));
        let first: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(first[0], "0");
        assert!((first[2].parse::<f64>().unwrap() - 1.0 / 3.0).abs() < 1e-12);
    }
}
