//! First passage above a level and the single-big-jump decomposition.
//!
//! With `A_n^{a,x} = {M_{n−1} ≤ a, S_n > x}` (`x > a`), the events are
//! disjoint in `n` and their union is `{the first passage above a lands
//! above x}`. The landing law of the first passage therefore gives both
//! the big-jump sum `Σ_n P(A_n^{a,x})` and, combined with the law of `M`
//! after landing, the full decomposition of `P(M > x)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::kernel::Kernel;
use super::maxlaw::MaxLaw;
use super::pmf::{floor_index, LatticePmf, TailCertificate, TOP_TAIL_TARGET};
use crate::error::{Error, Result};

/// Window mass below which the first-passage DP stops.
pub const PASSAGE_TOL: f64 = 1e-16;
/// Step cap of the first-passage DP.
pub const PASSAGE_MAX_STEPS: usize = 1_000_000;

/// Law of the position at the first passage strictly above level `a`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LandingLaw {
    pub step: f64,
    pub level: f64,
    /// `probs[i]` is the mass landing at index `level_index + 1 + i`.
    pub probs: Vec<f64>,
    pub level_index: i64,
    /// Mass landing above the grid top.
    pub overflow: f64,
    /// Mass that fell below the lower cutoff before passing the level.
    pub dropped: f64,
    /// Certified bound on the probability that dropped mass would still have
    /// passed the level.
    pub dropped_bound: f64,
    /// Mass still below the level when the DP stopped.
    pub residual: f64,
    pub steps: usize,
}

impl LandingLaw {
    /// Total passage probability resolved on the grid.
    pub fn total(&self) -> f64 {
        self.probs.iter().sum::<f64>() + self.overflow
    }

    /// Additive uncertainty of any probability assembled from this law.
    pub fn error_bound(&self) -> f64 {
        self.dropped_bound + self.residual
    }

    /// `Σ_n P(A_n^{a,x})`: passage landing strictly above `x`.
    pub fn bigjump_sum(&self, x: f64) -> f64 {
        let first = (floor_index(x, self.step) - self.level_index).max(0) as usize;
        let inside: f64 = if first >= self.probs.len() {
            0.0
        } else {
            self.probs[first..].iter().rev().sum()
        };
        inside + self.overflow
    }

    /// `P(landing > y, M > x)` with `y < x`, using the law of `M` for the
    /// maximum after landing.
    pub fn landing_then_exceed(&self, max_law: &MaxLaw, y: f64, x: f64) -> f64 {
        let fx = floor_index(x, self.step);
        let fy = floor_index(y, self.step);
        let mut acc = self.overflow;
        for (i, &p) in self.probs.iter().enumerate().rev() {
            let j = self.level_index + 1 + i as i64;
            if j <= fy {
                break;
            }
            acc += p * if j > fx { 1.0 } else { max_law.tail_index(fx - j) };
        }
        acc
    }
}

/// Landing law of the first passage above `a ≥ 0` for the walk started at
/// zero. Paths falling below `lower` are dropped, with their remaining
/// passage chance bounded by the walk's tail certificate.
pub fn first_passage_landing(pmf: &LatticePmf, a: f64, lower: f64, top: f64) -> Result<LandingLaw> {
    if !(a >= 0.0) || !(lower <= 0.0) || !(top > a) {
        return Err(Error::Param {
            name: "level",
            reason: format!("need lower ≤ 0 ≤ a < top, got lower={lower}, a={a}, top={top}"),
        });
    }
    let mean = pmf.mean();
    if mean >= 0.0 {
        return Err(Error::Drift(mean));
    }
    let h = pmf.step;
    let kernel = Kernel::new(pmf);
    let certificate = pmf.walk_certificate();
    let ia = floor_index(a, h);
    let il = floor_index(lower, h);
    let itop = (top / h).ceil() as i64;
    let width = (ia - il + 1) as usize;
    let mut cur = vec![0.0; width];
    cur[(-il) as usize] = 1.0;
    let landing_len = (itop - ia) as usize;
    let mut landing = vec![0.0; landing_len];
    let (mut overflow, mut dropped, mut steps) = (0.0, 0.0, 0);
    let kmax = kernel.kmax();
    while steps < PASSAGE_MAX_STEPS && cur.iter().sum::<f64>() >= PASSAGE_TOL {
        let add: Vec<f64> = (0..landing_len)
            .into_par_iter()
            .with_min_len(32)
            .map(|t| {
                let j = ia + 1 + t as i64;
                let mut acc = 0.0;
                for (ii, &c) in cur.iter().enumerate() {
                    let k = j - (il + ii as i64);
                    if k <= kmax {
                        acc += c * kernel.p(k);
                    }
                }
                acc
            })
            .collect();
        for (l, v) in landing.iter_mut().zip(add) {
            *l += v;
        }
        for (ii, &c) in cur.iter().enumerate() {
            overflow += c * kernel.gt(itop - (il + ii as i64));
        }
        let s = kernel.step_window(&cur, il);
        dropped += s.below;
        cur = s.inside;
        steps += 1;
    }
    let residual = cur.iter().sum();
    if steps == PASSAGE_MAX_STEPS {
        return Err(Error::NoConvergence {
            iterations: steps,
            delta: residual,
        });
    }
    Ok(LandingLaw {
        step: h,
        level: a,
        probs: landing,
        level_index: ia,
        overflow,
        dropped,
        dropped_bound: dropped * certificate.bound((ia - il) as f64 * h),
        residual,
        steps,
    })
}

/// Lower cutoff for [`first_passage_landing`] such that dropped paths
/// contribute at most `budget` to passage probabilities.
pub fn passage_lower_cutoff(certificate: &TailCertificate, a: f64, budget: f64) -> Result<f64> {
    let reach = certificate
        .level_for(budget)
        .ok_or_else(|| Error::Uncertified("no tail certificate to choose the lower cutoff".into()))?;
    Ok((a - reach).min(0.0))
}

/// Big-jump quantities read from one landing law at level `a`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BigJumpOracle {
    pub x: f64,
    pub a: f64,
    /// `P(M > x)` from the maximum law.
    pub tail: f64,
    /// `Σ_n P(A_n^{a,x})`.
    pub bigjump_sum: f64,
    /// `P(M > x, ∪_n A_n^{a, x−a})`.
    pub joint: f64,
    /// `P(M > x)` reassembled from the landing law; equals `tail` up to
    /// `error_bound`.
    pub decomposition: f64,
    pub error_bound: f64,
}

impl BigJumpOracle {
    /// `P(∪_n A_n^{a, x−a} | M > x)`.
    pub fn conditional_ratio(&self) -> f64 {
        self.joint / self.tail
    }
}

/// Evaluates the big-jump decomposition at `x` with prior-path bound `a`.
pub fn bigjump_oracle(pmf: &LatticePmf, max_law: &MaxLaw, x: f64, a: f64) -> Result<BigJumpOracle> {
    if !(x > a) {
        return Err(Error::Param {
            name: "x",
            reason: format!("need x > a, got x={x}, a={a}"),
        });
    }
    let tail = max_law.tail(x);
    let certificate = pmf.walk_certificate();
    let lower = passage_lower_cutoff(&certificate, a, 1e-6 * tail.max(f64::MIN_POSITIVE))?;
    let top = max_law.top().max(x + pmf.step);
    let landing = first_passage_landing(
        pmf,
        a,
        lower,
        top.max(certificate.level_for(TOP_TAIL_TARGET).unwrap_or(top)),
    )?;
    Ok(BigJumpOracle {
        x,
        a,
        tail,
        bigjump_sum: landing.bigjump_sum(x),
        joint: landing.landing_then_exceed(max_law, x - a, x),
        decomposition: landing.landing_then_exceed(max_law, a, x),
        error_bound: landing.error_bound(),
    })
}

/// Laws of the free walk `S_0, …, S_n` restricted to windows: mass below
/// `lower` is dropped, and the upper edge for `S_j` is
/// `upper + (n − j)·|min ξ|`, above which `S_n ≤ upper` is impossible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartialSumLaw {
    pub step: f64,
    pub min_index: i64,
    pub probs: Vec<f64>,
    /// Total mass dropped below the window so far.
    pub dropped_below: f64,
}

impl PartialSumLaw {
    /// `Σ_{kh ≤ a} P(S = kh)·e^{αkh}`.
    pub fn twisted_mass_below(&self, a: f64, alpha: f64) -> f64 {
        let ia = floor_index(a, self.step);
        self.probs
            .iter()
            .enumerate()
            .take_while(|(i, _)| self.min_index + (*i as i64) <= ia)
            .map(|(i, p)| p * (alpha * (self.min_index + i as i64) as f64 * self.step).exp())
            .sum()
    }
}

pub fn partial_sum_laws(pmf: &LatticePmf, n: usize, lower: f64, upper: f64) -> Result<Vec<PartialSumLaw>> {
    if !(lower <= 0.0 && upper >= 0.0) {
        return Err(Error::Param {
            name: "window",
            reason: format!("need lower ≤ 0 ≤ upper, got [{lower}, {upper}]"),
        });
    }
    let h = pmf.step;
    let kernel = Kernel::new(pmf);
    let il = floor_index(lower, h);
    let drop_per_step = (-pmf.min_index).max(0);
    let edge = |j: usize| floor_index(upper, h) + (n - j) as i64 * drop_per_step;
    let mut cur = vec![0.0; (edge(0) - il + 1) as usize];
    cur[(-il) as usize] = 1.0;
    let mut dropped_below = 0.0;
    let mut laws = vec![PartialSumLaw {
        step: h,
        min_index: il,
        probs: cur.clone(),
        dropped_below,
    }];
    for j in 1..=n {
        let s = kernel.step_window(&cur, il);
        dropped_below += s.below;
        cur = s.inside;
        cur.truncate((edge(j) - il + 1) as usize);
        laws.push(PartialSumLaw {
            step: h,
            min_index: il,
            probs: cur.clone(),
            dropped_below,
        });
    }
    Ok(laws)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::increments::IncrementModel;
    use crate::lattice::maxlaw::{lindley_fixed_point, DEFAULT_TOL};
    use crate::lattice::pmf::{default_span, discretize};

    fn two_point() -> LatticePmf {
        let m = IncrementModel::two_point(1.0, 0.25, -1.0).unwrap();
        discretize(&m, 1.0, default_span(&m, 1.0), false).unwrap()
    }

    #[test]
    fn skip_free_walk_lands_on_the_next_level() {
        let pmf = two_point();
        let landing = first_passage_landing(&pmf, 0.5, -40.0, 30.0).unwrap();
        // Upward steps are +1, so passage above 0 lands exactly at 1 with
        // probability P(M ≥ 1) = 1/3.
        assert!((landing.probs[0] - 1.0 / 3.0).abs() < 1e-12);
        assert!(landing.probs[1..].iter().all(|p| *p == 0.0));
        assert!(landing.error_bound() < 1e-12);
    }

    #[test]
    fn decomposition_reassembles_the_tail() {
        let m = IncrementModel::reference();
        let pmf = discretize(&m, 0.02, default_span(&m, 0.02), false).unwrap();
        let law = lindley_fixed_point(&pmf, DEFAULT_TOL).unwrap();
        for (x, a) in [(4.0, 1.0), (10.0, 2.5)] {
            let o = bigjump_oracle(&pmf, &law, x, a).unwrap();
            assert!((o.decomposition / o.tail - 1.0).abs() < 1e-6, "{o:?}");
            assert!(o.bigjump_sum <= o.tail && o.joint <= o.tail);
            assert!(o.bigjump_sum <= o.joint);
        }
    }

    #[test]
    fn two_point_bigjump_sum_is_zero_below_the_gap() {
        // Jumps are +1, so from M ≤ 0.5 no single step clears 4.5.
        let pmf = two_point();
        let law = lindley_fixed_point(&pmf, DEFAULT_TOL).unwrap();
        let o = bigjump_oracle(&pmf, &law, 4.5, 0.5).unwrap();
        assert_eq!(o.bigjump_sum, 0.0);
        assert!((o.tail - 3f64.powi(-5)).abs() < 1e-12);
        assert!((o.decomposition - o.tail).abs() <= o.error_bound, "{o:?}");
    }

    #[test]
    fn partial_sums_match_binomial() {
        let pmf = two_point();
        let laws = partial_sum_laws(&pmf, 3, -10.0, 0.0).unwrap();
        let s2 = &laws[2];
        let p = |k: i64| s2.probs.get((k - s2.min_index) as usize).copied().unwrap_or(0.0);
        assert!((p(-2) - 9.0 / 16.0).abs() < 1e-15);
        assert!((p(0) - 6.0 / 16.0).abs() < 1e-15);
        // S_2 = 2 cannot come back below 0 by step 3, so it is cut.
        assert_eq!(s2.probs.len() as i64 + s2.min_index - 1, 1);
        assert!((laws[3].twisted_mass_below(0.0, 0.0) - (1.0 - 10.0 / 64.0)).abs() < 1e-15);
    }
}
