use super::{check_horizon, run_blocks, EstimatorReport, Moments, SimConfig};
use crate::error::{Error, Result};
use crate::increments::IncrementModel;
use crate::lattice::TailCertificate;

/// Truncation slack `K` for crude simulation at `x`, with its certified
/// bias bound `P(M > K)`. A path at `S < x − K` can still exceed `x` with
/// probability at most the certificate bound at `K`; `K` is chosen so that
/// this is at most `0.1%` of a certified lower bound on `P(M > x)`.
pub fn crude_slack(model: &IncrementModel, x: f64) -> Result<(f64, f64)> {
    let cert = TailCertificate::from_model(model);
    if cert == TailCertificate::None {
        return Err(Error::Regime(format!(
            "{model}: no certified bound on the tail of the maximum"
        )));
    }
    let scale = model.max_tail_lower_bound(x);
    let target = if scale > 0.0 { 1e-3 * scale } else { 1e-12 };
    let k = cert.level_for(target).expect("certificate decays");
    Ok((k, cert.bound(k)))
}

/// Crude Monte Carlo for `P(M > x)`: each path runs until it exceeds `x`
/// (hit) or falls below `x − K` (miss).
pub fn estimate_tail_crude(model: &IncrementModel, x: f64, cfg: &SimConfig) -> Result<EstimatorReport> {
    let (slack, bias_bound) = slack_for(model, x, cfg)?;
    let floor = x - slack;
    run_indicator(model, x, cfg, "crude", bias_bound, |s, _| {
        if s > x {
            Some(true)
        } else if s < floor {
            Some(false)
        } else {
            None
        }
    })
}

/// Crude Monte Carlo for `P(M_N > x)`, with the same certified early miss
/// rule as [`estimate_tail_crude`].
pub fn estimate_finite_tail_crude(
    model: &IncrementModel,
    x: f64,
    n: usize,
    cfg: &SimConfig,
) -> Result<EstimatorReport> {
    let (slack, bias_bound) = slack_for(model, x, cfg)?;
    let floor = x - slack;
    let mut cfg = cfg.clone();
    cfg.horizon_cap = cfg.horizon_cap.max(n + 1);
    run_indicator(model, x, &cfg, &format!("crude_finite_{n}"), bias_bound, |s, k| {
        if s > x {
            Some(true)
        } else if s < floor || k >= n {
            Some(false)
        } else {
            None
        }
    })
    .map(|mut r| {
        if n == 0 {
            r.estimate = 0.0;
            r.stderr = 0.0;
        }
        r
    })
}

/// Crude Monte Carlo for `P(M_{σ1} > x)`, `σ1 = min{n ≥ 1 : S_n < 0}`; the
/// stopping rule is exact, so the bias bound is zero.
pub fn estimate_stopped_tail_crude(model: &IncrementModel, x: f64, cfg: &SimConfig) -> Result<EstimatorReport> {
    if model.mean()? >= 0.0 {
        return Err(Error::Drift(model.mean()?));
    }
    run_indicator(model, x, cfg, "crude_stopped", 0.0, |s, _| {
        if s > x {
            Some(true)
        } else if s < 0.0 {
            Some(false)
        } else {
            None
        }
    })
}

fn slack_for(model: &IncrementModel, x: f64, cfg: &SimConfig) -> Result<(f64, f64)> {
    let (derived, derived_bias) = crude_slack(model, x)?;
    Ok(match cfg.slack {
        Some(k) => (k, TailCertificate::from_model(model).bound(k)),
        None => (derived, derived_bias),
    })
}

/// Simulates paths until `stop(S_n, n)` decides them and averages the
/// decisions. Paths reaching the horizon cap count as misses and are
/// refused beyond the allowed share.
fn run_indicator<F>(
    model: &IncrementModel,
    x: f64,
    cfg: &SimConfig,
    method: &str,
    bias_bound: f64,
    stop: F,
) -> Result<EstimatorReport>
where
    F: Fn(f64, usize) -> Option<bool> + Sync,
{
    let cap = cfg.horizon_cap;
    let blocks = run_blocks(cfg, |rng, paths| {
        let (mut m, mut hits) = (Moments::default(), 0u64);
        for _ in 0..paths {
            let mut s = 0.0;
            let mut outcome = if stop(s, 0) == Some(true) { Some(true) } else { None };
            let mut n = 0;
            while outcome.is_none() && n < cap {
                n += 1;
                s += model.sample(rng);
                outcome = stop(s, n);
            }
            if outcome.is_none() {
                hits += 1;
            }
            m.push(if outcome == Some(true) { 1.0 } else { 0.0 });
        }
        (m, hits)
    })?;
    let (mut m, mut hits) = (Moments::default(), 0);
    for (bm, bh) in &blocks {
        m.merge(bm);
        hits += bh;
    }
    check_horizon(hits, cfg.n_paths)?;
    Ok(EstimatorReport {
        method: method.into(),
        model: model.to_string(),
        x,
        estimate: m.mean(),
        stderr: m.stderr(),
        bias_bound,
        n_paths: cfg.n_paths,
        n_effective: m.n,
        horizon_hits: hits,
        seed: cfg.seed,
        warnings: Vec::new(),
    })
}
