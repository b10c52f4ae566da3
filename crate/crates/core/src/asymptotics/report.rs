use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::increments::IncrementModel;
use crate::interval::Interval;

/// Default tolerance on the final deviation.
pub const DEFAULT_REPORT_TOL: f64 = 0.1;
/// Deviations at or below this level count as exact agreement.
pub const EXACT_DEV: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Oracle,
    Simulation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Converging,
    Inconclusive,
    Diverging,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub x: f64,
    pub measured: f64,
    pub predicted: f64,
    pub ratio: f64,
    /// `|measured/predicted − 1|`, worst case over the predicted interval.
    pub dev: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub rows: Vec<ConvergenceRow>,
    pub verdict: Verdict,
    pub tol: f64,
    pub provenance: Provenance,
    /// Least-squares slope of `dev` against the row index; negative for a
    /// decreasing trend.
    pub trend_slope: f64,
}

impl ConvergenceReport {
    pub fn final_dev(&self) -> f64 {
        self.rows.last().map_or(f64::NAN, |r| r.dev)
    }

    /// Deviations strictly decreasing, or already at exact agreement.
    pub fn strictly_decreasing(&self) -> bool {
        decreasing(&self.rows)
    }

    /// A decreasing trend in the least-squares sense, with the final
    /// deviation within tolerance.
    pub fn trend_passes(&self) -> bool {
        self.trend_slope < 0.0 && self.final_dev() <= self.tol
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "x,measured,predicted,ratio,dev")?;
        for r in &self.rows {
            writeln!(w, "{},{:e},{:e},{},{}", r.x, r.measured, r.predicted, r.ratio, r.dev)?;
        }
        Ok(())
    }
}

/// Compares measured values against a predicted constant over an
/// increasing `x` grid. The verdict is `converging` when the deviation is
/// strictly decreasing (or exactly zero) and ends within `tol`,
/// `diverging` when it is strictly increasing, and `inconclusive`
/// otherwise.
pub fn convergence_report(
    predicted: Interval,
    measured: &[(f64, f64)],
    tol: f64,
    provenance: Provenance,
) -> Result<ConvergenceReport> {
    if measured.len() < 3 {
        return Err(Error::Param {
            name: "measured",
            reason: format!("need ≥ 3 points, got {}", measured.len()),
        });
    }
    if measured.windows(2).any(|w| !(w[1].0 > w[0].0)) {
        return Err(Error::Param {
            name: "measured",
            reason: "x grid must be increasing".into(),
        });
    }
    if let Some((x, v)) = measured.iter().find(|(_, v)| !(*v > 0.0)) {
        return Err(Error::Domain(format!("measured value {v} at x = {x} is not positive")));
    }
    if !(predicted.lo > 0.0) {
        return Err(Error::Domain(format!(
            "predicted interval {predicted:?} is not positive"
        )));
    }
    let rows: Vec<ConvergenceRow> = measured
        .iter()
        .map(|&(x, m)| {
            let dev = [predicted.lo, predicted.value, predicted.hi]
                .iter()
                .map(|p| (m / p - 1.0).abs())
                .fold(0.0, f64::max);
            ConvergenceRow {
                x,
                measured: m,
                predicted: predicted.value,
                ratio: m / predicted.value,
                dev,
            }
        })
        .collect();
    let decreasing = decreasing(&rows);
    let increasing = rows.windows(2).all(|w| w[1].dev > w[0].dev);
    let final_dev = rows.last().expect("non-empty").dev;
    let verdict = if decreasing && final_dev <= tol {
        Verdict::Converging
    } else if increasing {
        Verdict::Diverging
    } else {
        Verdict::Inconclusive
    };
    let trend_slope = slope(&rows.iter().map(|r| r.dev).collect::<Vec<_>>());
    Ok(ConvergenceReport {
        rows,
        verdict,
        tol,
        provenance,
        trend_slope,
    })
}

fn decreasing(rows: &[ConvergenceRow]) -> bool {
    rows.windows(2).all(|w| w[1].dev < w[0].dev || w[1].dev <= EXACT_DEV)
}

fn slope(ys: &[f64]) -> f64 {
    let n = ys.len() as f64;
    let mx = (n - 1.0) / 2.0;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (i, y) in ys.iter().enumerate() {
        let dx = i as f64 - mx;
        sxy += dx * (y - my);
        sxx += dx * dx;
    }
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

/// Points `x` with `P(ξ > x) = level` for each level, by bisection on the
/// log tail.
pub fn tail_level_grid(model: &IncrementModel, levels: &[f64]) -> Result<Vec<f64>> {
    levels
        .iter()
        .map(|&level| {
            if !(level > 0.0 && level < 1.0) {
                return Err(Error::Param {
                    name: "levels",
                    reason: format!("{level} is not in (0, 1)"),
                });
            }
            let target = level.ln();
            let mut lo = model.support_min();
            let mut hi = lo.abs().max(1.0);
            while model.log_tail(hi) > target {
                hi *= 2.0;
                if hi > 1e12 {
                    return Err(Error::Domain(format!("tail never falls to {level}")));
                }
            }
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if model.log_tail(mid) > target {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            Ok(hi)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn xs() -> Vec<f64> {
        vec![2.0, 4.0, 8.0, 16.0]
    }

    #[test]
    fn exact_match_converges() {
        let m: Vec<(f64, f64)> = xs().into_iter().map(|x| (x, 2.0)).collect();
        let r = convergence_report(Interval::exact(2.0), &m, 0.1, Provenance::Oracle).unwrap();
        assert!(r.rows.iter().all(|row| row.dev == 0.0));
        assert_eq!(r.verdict, Verdict::Converging);
    }

    #[test]
    fn one_over_x_converges() {
        let m: Vec<(f64, f64)> = xs().into_iter().map(|x| (x, 2.0 * (1.0 + 1.0 / x))).collect();
        let r = convergence_report(Interval::exact(2.0), &m, 0.1, Provenance::Oracle).unwrap();
        assert_eq!(r.verdict, Verdict::Converging);
        assert!(r.trend_slope < 0.0);
    }

    #[test]
    fn oscillation_does_not_converge() {
        let m: Vec<(f64, f64)> = xs().into_iter().map(|x| (x, 2.0 * (1.0 + x.sin()))).collect();
        let r = convergence_report(Interval::exact(2.0), &m, 0.1, Provenance::Simulation).unwrap();
        assert_ne!(r.verdict, Verdict::Converging);
    }

    #[test]
    fn growth_diverges() {
        let m: Vec<(f64, f64)> = xs().into_iter().map(|x| (x, 2.0 * (1.0 + x / 100.0))).collect();
        let r = convergence_report(Interval::exact(2.0), &m, 0.1, Provenance::Oracle).unwrap();
        assert_eq!(r.verdict, Verdict::Diverging);
    }

    #[test]
    fn input_validation() {
        let p = Interval::exact(1.0);
        assert!(convergence_report(p, &[(1.0, 1.0), (2.0, 1.0)], 0.1, Provenance::Oracle).is_err());
        assert!(convergence_report(p, &[(1.0, 1.0), (2.0, 0.0), (3.0, 1.0)], 0.1, Provenance::Oracle).is_err());
        assert!(convergence_report(p, &[(1.0, 1.0), (1.0, 1.0), (3.0, 1.0)], 0.1, Provenance::Oracle).is_err());
    }

    #[test]
    fn csv_header() {
        let m: Vec<(f64, f64)> = xs().into_iter().map(|x| (x, 2.0)).collect();
        let r = convergence_report(Interval::exact(2.0), &m, 0.1, Provenance::Oracle).unwrap();
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf)
            .unwrap()
            .starts_with("x,measured,predicted,ratio,dev\n"));
    }

    #[test]
    fn level_grid_inverts_the_tail() {
        let m = IncrementModel::reference();
        let grid = tail_level_grid(&m, &[1e-4, 1e-9]).unwrap();
        assert!((m.tail(grid[0]) / 1e-4 - 1.0).abs() < 1e-10);
        assert!((m.tail(grid[1]) / 1e-9 - 1.0).abs() < 1e-10);
        assert!((grid[0] - 4.0883).abs() < 1e-3 && (grid[1] - 13.7721).abs() < 1e-3);
    }
}
