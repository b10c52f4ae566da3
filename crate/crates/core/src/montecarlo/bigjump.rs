use rand::Rng;
use serde::{Deserialize, Serialize};

use super::crude::crude_slack;
use super::{check_horizon, run_blocks, EstimatorReport, Moments, SimConfig};
use crate::error::{Error, Result};
use crate::increments::{HChoice, IncrementModel};

/// Remainder share of the estimate above which a warning is attached to
/// the big-jump sum.
pub const REMAINDER_WARNING_SHARE: f64 = 0.1;

/// Conditional Monte Carlo for `Σ_{n ≤ N_cut} P(A_n^{a,x})`, using
/// `P(A_n) = E[1{M_{n−1} ≤ a}·P(ξ > x − S_{n−1})]` with the tail evaluated
/// exactly. Terms beyond `N_cut` are bounded by the Chernoff remainder
/// `Σ_{n > N_cut} φ(α)^n e^{-αx}`, reported as `bias_bound`.
pub fn estimate_bigjump_sum(
    model: &IncrementModel,
    x: f64,
    a: f64,
    n_cut: usize,
    cfg: &SimConfig,
) -> Result<EstimatorReport> {
    if !(a >= 0.0 && x > a) {
        return Err(Error::Param {
            name: "a",
            reason: format!("need x > a ≥ 0, got x={x}, a={a}"),
        });
    }
    let blocks = run_blocks(cfg, |rng, paths| {
        let mut m = Moments::default();
        for _ in 0..paths {
            let (mut s, mut max, mut acc) = (0.0f64, 0.0f64, 0.0);
            for _ in 0..n_cut {
                if max > a {
                    break;
                }
                acc += model.tail(x - s);
                s += model.sample(rng);
                max = max.max(s);
            }
            m.push(acc);
        }
        m
    })?;
    let mut m = Moments::default();
    for b in &blocks {
        m.merge(b);
    }
    let bias_bound = match model.drift_exponent() {
        Some((alpha, phi)) => phi.powi(n_cut as i32 + 1) / (1.0 - phi) * (-alpha * x).exp(),
        None => f64::INFINITY,
    };
    let estimate = m.mean();
    let mut warnings = Vec::new();
    if bias_bound > REMAINDER_WARNING_SHARE * estimate && bias_bound > 0.0 {
        warnings.push(format!(
            "N_cut={n_cut} leaves a remainder bound {bias_bound:e} against estimate {estimate:e}"
        ));
    }
    Ok(EstimatorReport {
        method: "bigjump_sum".into(),
        model: model.to_string(),
        x,
        estimate,
        stderr: m.stderr(),
        bias_bound,
        n_paths: cfg.n_paths,
        n_effective: m.n,
        horizon_hits: 0,
        seed: cfg.seed,
        warnings,
    })
}

/// Per-path record of the big-jump events of one simulated path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BigJumpRecord {
    /// First `n` with `S_n > a`.
    pub first_above_a: Option<usize>,
    /// The unique `n` with `M_{n−1} ≤ a` and `S_n > x − a`, if any.
    pub bigjump_index: Option<usize>,
    /// First `n` with `S_n > x`.
    pub exceed_time: Option<usize>,
    /// The path was cut by the horizon cap before being decided.
    pub undecided: bool,
}

/// Simulates one path until it exceeds `x` or falls below `x − slack`.
fn simulate_record<R: Rng + ?Sized>(
    model: &IncrementModel,
    x: f64,
    a: f64,
    floor: f64,
    cap: usize,
    rng: &mut R,
) -> BigJumpRecord {
    let mut rec = BigJumpRecord {
        first_above_a: None,
        bigjump_index: None,
        exceed_time: None,
        undecided: true,
    };
    let mut s = 0.0;
    for n in 1..=cap {
        s += model.sample(rng);
        if rec.first_above_a.is_none() && s > a {
            // The first passage above a is the only step at which an
            // A_n^{a, x−a} event can fire, so the events are disjoint.
            rec.first_above_a = Some(n);
            if s > x - a {
                rec.bigjump_index = Some(n);
            }
        }
        if s > x {
            rec.exceed_time = Some(n);
            rec.undecided = false;
            break;
        }
        if s < floor {
            rec.undecided = false;
            break;
        }
    }
    rec
}

/// All per-path records, in path order (for traces).
pub fn bigjump_records(model: &IncrementModel, x: f64, a: f64, cfg: &SimConfig) -> Result<Vec<BigJumpRecord>> {
    let (slack, _) = crude_slack(model, x)?;
    let floor = x - cfg.slack.unwrap_or(slack);
    let blocks = run_blocks(cfg, |rng, paths| {
        (0..paths)
            .map(|_| simulate_record(model, x, a, floor, cfg.horizon_cap, rng))
            .collect::<Vec<_>>()
    })?;
    Ok(blocks.into_iter().flatten().collect())
}

/// Estimates `P(∪_n A_n^{h(x), x−h(x)} | M > x)` as a ratio of counts over
/// the same simulated paths.
pub fn bigjump_conditional_ratio(
    model: &IncrementModel,
    x: f64,
    h_choice: HChoice,
    cfg: &SimConfig,
) -> Result<EstimatorReport> {
    let a = h_choice.apply(x);
    let (slack, bias) = crude_slack(model, x)?;
    let floor = x - cfg.slack.unwrap_or(slack);
    let blocks = run_blocks(cfg, |rng, paths| {
        let (mut cond, mut joint, mut hits) = (0u64, 0u64, 0u64);
        for _ in 0..paths {
            let rec = simulate_record(model, x, a, floor, cfg.horizon_cap, rng);
            if rec.undecided {
                hits += 1;
            }
            if rec.exceed_time.is_some() {
                cond += 1;
                if rec.bigjump_index.is_some() {
                    joint += 1;
                }
            }
        }
        (cond, joint, hits)
    })?;
    let (cond, joint, hits) = blocks
        .iter()
        .fold((0, 0, 0), |acc, b| (acc.0 + b.0, acc.1 + b.1, acc.2 + b.2));
    check_horizon(hits, cfg.n_paths)?;
    let mut warnings = Vec::new();
    let (estimate, stderr) = if cond == 0 {
        warnings.push("inconclusive: no path exceeded x".to_string());
        (f64::NAN, f64::NAN)
    } else {
        let r = joint as f64 / cond as f64;
        (r, (r * (1.0 - r) / cond as f64).sqrt())
    };
    Ok(EstimatorReport {
        method: format!("bigjump_ratio_{h_choice}"),
        model: model.to_string(),
        x,
        estimate,
        stderr,
        bias_bound: bias / model.max_tail_lower_bound(x).max(f64::MIN_POSITIVE),
        n_paths: cfg.n_paths,
        n_effective: cond,
        horizon_hits: hits,
        seed: cfg.seed,
        warnings,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileRow {
    pub n: usize,
    /// Estimate of `P(M_n > x | M > x)`.
    pub estimate: f64,
    pub stderr: f64,
    pub conditioning_count: u64,
}

/// Estimates `P(M_N > x | M > x)` for each `N` in `n_grid` from the
/// exceedance times of shared paths.
pub fn exceedance_time_profile(
    model: &IncrementModel,
    x: f64,
    n_grid: &[usize],
    cfg: &SimConfig,
) -> Result<Vec<ProfileRow>> {
    let (slack, _) = crude_slack(model, x)?;
    let floor = x - cfg.slack.unwrap_or(slack);
    let blocks = run_blocks(cfg, |rng, paths| {
        let mut times = Vec::new();
        let mut hits = 0u64;
        for _ in 0..paths {
            let rec = simulate_record(model, x, x, floor, cfg.horizon_cap, rng);
            hits += rec.undecided as u64;
            if let Some(t) = rec.exceed_time {
                times.push(t);
            }
        }
        (times, hits)
    })?;
    let hits: u64 = blocks.iter().map(|b| b.1).sum();
    check_horizon(hits, cfg.n_paths)?;
    let times: Vec<usize> = blocks.into_iter().flat_map(|b| b.0).collect();
    let cond = times.len() as u64;
    Ok(n_grid
        .iter()
        .map(|&n| {
            let (estimate, stderr) = if cond == 0 {
                (f64::NAN, f64::NAN)
            } else {
                let r = times.iter().filter(|&&t| t <= n).count() as f64 / cond as f64;
                (r, (r * (1.0 - r) / cond as f64).sqrt())
            };
            ProfileRow {
                n,
                estimate,
                stderr,
                conditioning_count: cond,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{bigjump_oracle, default_span, discretize, finite_horizon, lindley_fixed_point, DEFAULT_TOL};

    #[test]
    fn point_mass_has_no_big_jumps() {
        let m = IncrementModel::point_mass(-1.0).unwrap();
        let r = estimate_bigjump_sum(&m, 4.5, 0.5, 60, &SimConfig::new(100, 0)).unwrap();
        assert_eq!(r.estimate, 0.0);
    }

    #[test]
    fn skip_free_walk_has_no_big_jumps() {
        let m = IncrementModel::two_point(1.0, 0.25, -1.0).unwrap();
        let r = estimate_bigjump_sum(&m, 4.5, 0.5, 60, &SimConfig::new(10_000, 0)).unwrap();
        assert_eq!(r.estimate, 0.0);
        assert_eq!(r.stderr, 0.0);
        assert_eq!(r.z_score(0.0), 0.0);
    }

    #[test]
    fn bigjump_sum_matches_oracle_and_bounds_tail() {
        let m = IncrementModel::two_point(3.0, 0.1, -1.0).unwrap();
        let pmf = discretize(&m, 1.0, default_span(&m, 1.0), false).unwrap();
        let law = lindley_fixed_point(&pmf, DEFAULT_TOL).unwrap();
        let o = bigjump_oracle(&pmf, &law, 4.5, 2.0).unwrap();
        let r = estimate_bigjump_sum(&m, 4.5, 2.0, 200, &SimConfig::new(200_000, 3)).unwrap();
        assert!(r.warnings.is_empty() && r.bias_bound < 1e-3 * r.estimate);
        assert!(r.z_score(o.bigjump_sum).abs() < 4.0, "{r:?} vs {o:?}");
        assert!(r.estimate <= o.tail);
    }

    #[test]
    fn disjoint_records() {
        let m = IncrementModel::reference();
        let recs = bigjump_records(&m, 4.0, 1.0, &SimConfig::new(5000, 1)).unwrap();
        assert_eq!(recs.len(), 5000);
        for r in &recs {
            if let Some(n) = r.bigjump_index {
                assert_eq!(r.first_above_a, Some(n));
            }
        }
    }

    #[test]
    fn conditional_ratio_matches_oracle_at_small_x() {
        let m = IncrementModel::reference();
        let pmf = discretize(&m, 0.01, default_span(&m, 0.01), false).unwrap();
        let law = lindley_fixed_point(&pmf, DEFAULT_TOL).unwrap();
        let x = 4.0;
        let o = bigjump_oracle(&pmf, &law, x, x / 4.0).unwrap();
        let r = bigjump_conditional_ratio(&m, x, HChoice::Quarter, &SimConfig::new(200_000, 2).with_shards(4)).unwrap();
        assert!((0.0..=1.0).contains(&r.estimate));
        assert!(
            r.z_score(o.conditional_ratio()).abs() < 4.0,
            "{r:?} vs {}",
            o.conditional_ratio()
        );
    }

    #[test]
    fn profile_matches_finite_horizon_laws() {
        let m = IncrementModel::reference();
        let pmf = discretize(&m, 0.01, default_span(&m, 0.01), false).unwrap();
        let laws = finite_horizon(&pmf, 10).unwrap();
        let fixed = lindley_fixed_point(&pmf, DEFAULT_TOL).unwrap();
        let x = 4.0;
        let rows = exceedance_time_profile(&m, x, &[0, 1, 3, 10], &SimConfig::new(200_000, 4)).unwrap();
        assert_eq!(rows[0].estimate, 0.0);
        for row in &rows[1..] {
            let want = laws[row.n].tail(x) / fixed.tail(x);
            assert!(
                (row.estimate - want).abs() < 4.0 * row.stderr + 2e-3,
                "{row:?} vs {want}"
            );
        }
        assert!(rows.windows(2).all(|w| w[1].estimate >= w[0].estimate));
    }
}
