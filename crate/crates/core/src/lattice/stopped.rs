use serde::{Deserialize, Serialize};

use super::kernel::Kernel;
use super::maxlaw::MaxLaw;
use super::pmf::{floor_index, snap, LatticePmf, TailCertificate, TOP_TAIL_TARGET};
use crate::error::{Error, Result};

/// Survival mass below which the stopped DP ends.
pub const SURVIVAL_TOL: f64 = 1e-12;
/// Largest residual `P(σ1 > horizon)` accepted by [`stopped_max_sigma1`].
pub const MAX_RESIDUAL: f64 = 1e-6;

/// `P(M_{σ1} > x)` at one level, with the survival mass still undecided
/// when the DP stopped.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StoppedTail {
    pub x: f64,
    pub snapped_x: f64,
    /// Mass that exceeded `x` before the first descent below zero.
    pub prob: f64,
    /// Mass still in `[0, x]` at the horizon; the true value lies in
    /// `[prob, prob + residual]`.
    pub residual: f64,
}

/// The walk stopped at `σ1 = min{n ≥ 1 : S_n < 0}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoppedLaw {
    pub step: f64,
    /// Tail of `M_{σ1}` at the requested levels.
    pub max_tail: Vec<StoppedTail>,
    /// Law of the undershoot `χ = −S_{σ1}` on the grid.
    pub chi: MaxLaw,
    /// Mass that left the grid top before `σ1`; its `χ` is not resolved.
    pub chi_escape: f64,
    /// `P(σ1 > steps)` on the grid.
    pub residual: f64,
    pub steps: usize,
}

impl StoppedLaw {
    /// Total mass absorbed below zero within `steps`.
    pub fn absorbed(&self) -> f64 {
        self.chi.probs.iter().sum()
    }

    /// `Σ absorbed + escaped + residual`, which must equal one.
    pub fn conservation(&self) -> f64 {
        self.absorbed() + self.chi_escape + self.residual
    }

    pub fn tail_at(&self, x: f64) -> Option<&StoppedTail> {
        self.max_tail.iter().find(|t| (t.x - x).abs() < 1e-12)
    }
}

/// Law of the maximum stopped at the first strict descent below zero, by a
/// dynamic program over the walk killed below zero.
///
/// The undershoot law comes from one DP on `[0, top]`; each level `x`
/// gets a DP killed above `x` whose escaping mass is `P(M_{σ1} > x)`. Both
/// run until the surviving mass drops below `1e-12` or `horizon` steps;
/// a residual above `1e-6` is refused.
pub fn stopped_max_sigma1(pmf: &LatticePmf, horizon: usize, levels: &[f64]) -> Result<StoppedLaw> {
    let law = stopped_max_sigma1_partial(pmf, horizon, levels)?;
    let worst = law.max_tail.iter().map(|t| t.residual).fold(law.residual, f64::max);
    if worst > MAX_RESIDUAL {
        return Err(Error::Horizon { residual: worst });
    }
    Ok(law)
}

/// As [`stopped_max_sigma1`], but returns whatever the DP reached by the
/// horizon, with the residual recorded rather than refused.
pub fn stopped_max_sigma1_partial(pmf: &LatticePmf, horizon: usize, levels: &[f64]) -> Result<StoppedLaw> {
    let mean = pmf.mean();
    if mean >= 0.0 {
        return Err(Error::Drift(mean));
    }
    let h = pmf.step;
    let kernel = Kernel::new(pmf);
    let certificate = pmf.walk_certificate();
    let top = certificate.level_for(TOP_TAIL_TARGET).unwrap_or(0.0).max(h);
    let top_index = (top / h).ceil() as i64;

    // Undershoot DP on [0, top].
    let max_chi = (-pmf.min_index).max(1) as usize;
    let mut chi = vec![0.0; max_chi + 1];
    let mut cur = vec![0.0; top_index as usize + 1];
    cur[0] = 1.0;
    let mut chi_escape = 0.0;
    let mut steps = 0;
    while steps < horizon && cur.iter().sum::<f64>() >= SURVIVAL_TOL {
        for (m, slot) in chi.iter_mut().enumerate().skip(1) {
            // Landing at −m from state i needs a step of −m − i.
            let mut acc = 0.0;
            for (i, &c) in cur.iter().enumerate().take(max_chi) {
                acc += c * kernel.p(-(m as i64) - i as i64);
            }
            *slot += acc;
        }
        let s = kernel.step_window(&cur, 0);
        chi_escape += s.above;
        cur = s.inside;
        steps += 1;
    }
    let residual: f64 = cur.iter().sum();

    let max_tail = levels
        .iter()
        .map(|&x| level_tail(&kernel, x, h, horizon))
        .collect::<Result<Vec<_>>>()?;

    Ok(StoppedLaw {
        step: h,
        max_tail,
        chi: MaxLaw {
            step: h,
            probs: chi,
            overflow: 0.0,
            trunc_bound: 0.0,
            certificate: TailCertificate::None,
            horizon: None,
            twisted_moment: None,
        },
        chi_escape,
        residual,
        steps,
    })
}

fn level_tail(kernel: &Kernel<'_>, x: f64, h: f64, horizon: usize) -> Result<StoppedTail> {
    if !(x >= 0.0) {
        return Err(Error::Param {
            name: "levels",
            reason: format!("level {x} must be ≥ 0"),
        });
    }
    let j = floor_index(x, h);
    let mut cur = vec![0.0; j as usize + 1];
    cur[0] = 1.0;
    let mut prob = 0.0;
    let mut steps = 0;
    while steps < horizon && cur.iter().sum::<f64>() >= SURVIVAL_TOL {
        let s = kernel.step_window(&cur, 0);
        prob += s.above;
        cur = s.inside;
        steps += 1;
    }
    Ok(StoppedTail {
        x,
        snapped_x: snap(x, h),
        prob,
        residual: cur.iter().sum(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::increments::IncrementModel;
    use crate::lattice::pmf::{default_span, discretize};

    fn lattice(m: &IncrementModel) -> LatticePmf {
        discretize(m, 1.0, default_span(m, 1.0), false).unwrap()
    }

    #[test]
    fn point_mass_stops_at_once() {
        let pmf = lattice(&IncrementModel::point_mass(-1.0).unwrap());
        let s = stopped_max_sigma1(&pmf, 100, &[0.0, 0.5]).unwrap();
        assert_eq!(s.steps, 1);
        assert_eq!(s.chi.probs[1], 1.0);
        assert_eq!(s.tail_at(0.0).unwrap().prob, 0.0);
        assert!((s.chi.exp_moment(-1.0).unwrap().value - (-1f64).exp()).abs() < 1e-15);
    }

    /// Exhaustive enumeration of the `2^depth` paths of the ±1 walk:
    /// returns `P(σ1 ≤ depth)` and `P(max before σ1 ∧ depth > level)`.
    fn enumerate(p_up: f64, depth: u32, level: i64) -> (f64, f64) {
        let (mut absorbed, mut exceeded) = (0.0, 0.0);
        for bits in 0u32..(1 << depth) {
            let (mut s, mut max, mut w, mut stopped) = (0i64, 0i64, 1.0, false);
            // Every step's weight is applied, so continuations of an
            // absorbed prefix together carry exactly the prefix weight.
            for n in 0..depth {
                let up = bits >> n & 1 == 1;
                w *= if up { p_up } else { 1.0 - p_up };
                if !stopped {
                    s += if up { 1 } else { -1 };
                    max = max.max(s);
                    stopped = s < 0;
                }
            }
            if stopped {
                absorbed += w;
            }
            if max > level {
                exceeded += w;
            }
        }
        (absorbed, exceeded)
    }

    #[test]
    fn two_point_matches_path_enumeration() {
        let pmf = lattice(&IncrementModel::two_point(1.0, 0.25, -1.0).unwrap());
        let one = stopped_max_sigma1_partial(&pmf, 1, &[]).unwrap();
        assert!((one.chi.probs[1] - 0.75).abs() < 1e-15);

        let depth = 12;
        let s = stopped_max_sigma1_partial(&pmf, depth, &[0.5, 1.5, 2.5]).unwrap();
        assert_eq!(s.chi.probs.iter().skip(2).sum::<f64>(), 0.0);
        let (absorbed, _) = enumerate(0.25, depth as u32, 0);
        assert!((s.absorbed() - absorbed).abs() < 1e-12);
        for (level, row) in [0i64, 1, 2].into_iter().zip(&s.max_tail) {
            let (_, exceeded) = enumerate(0.25, depth as u32, level);
            assert!((row.prob - exceeded).abs() < 1e-12, "level {level}");
        }
        assert!((s.max_tail[0].prob - 0.25).abs() < 1e-12);
        assert!((s.conservation() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn twenty_step_two_point_dp() {
        let pmf = lattice(&IncrementModel::two_point(1.0, 0.25, -1.0).unwrap());
        let s = stopped_max_sigma1_partial(&pmf, 20, &[0.5]).unwrap();
        // After the first step σ1 = 1 with probability 0.75.
        assert!(s.chi.probs[1] >= 0.75);
        assert!((s.conservation() - 1.0).abs() < 1e-10);
        assert!(s.residual > MAX_RESIDUAL);
        assert!(matches!(
            stopped_max_sigma1(&pmf, 20, &[0.5]),
            Err(Error::Horizon { .. })
        ));
        assert!(stopped_max_sigma1(&pmf, 2000, &[0.5]).is_ok());
    }

    #[test]
    fn reference_conserves_mass() {
        let m = IncrementModel::reference();
        let pmf = discretize(&m, 0.02, default_span(&m, 0.02), false).unwrap();
        let s = stopped_max_sigma1(&pmf, 10_000, &[2.0, 6.0]).unwrap();
        assert!((s.conservation() - 1.0).abs() < 1e-10);
        assert!(s.chi.probs[1..].iter().sum::<f64>() > 0.0);
        assert!(s.max_tail[1].prob < s.max_tail[0].prob);
    }
}
