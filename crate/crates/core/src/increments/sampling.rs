//! Inverse-CDF samplers. Every draw consumes exactly one uniform so that
//! paths stay aligned across estimators that share a stream.

use rand::Rng;

use super::{IncrementModel, PolyExp};
use crate::error::{Error, Result};

/// Probability-argument tolerance of the inversion: stop once
/// `|ln P(η > y) − ln target| ≤ 1e-12`.
const INVERSION_TOL: f64 = 1e-12;
const INVERSION_MAX_ITER: usize = 200;

/// Uniform on `(0, 1]`.
fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    1.0 - rng.random::<f64>()
}

impl PolyExp {
    /// Solves `β ln(1+y) + γ y = level` for `y ≥ start`, where the left side
    /// at `start` does not exceed `level`. The map is concave and increasing,
    /// so Newton iterates from the left increase monotonically to the root.
    fn invert_log_tail(&self, level: f64, start: f64) -> f64 {
        let mut y = start;
        for _ in 0..INVERSION_MAX_ITER {
            let f = self.beta * y.ln_1p() + self.gamma * y - level;
            if f.abs() <= INVERSION_TOL * level.abs().max(1.0) {
                break;
            }
            let step = f / (self.beta / (1.0 + y) + self.gamma);
            y -= step;
            if step.abs() <= f64::EPSILON * y.abs() {
                break;
            }
        }
        y.max(start)
    }
}

impl IncrementModel {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u = open_unit(rng);
        match self {
            IncrementModel::PolyExp(p) => p.invert_log_tail(-u.ln(), 0.0) - p.shift,
            IncrementModel::PointMass(pm) => pm.value,
            IncrementModel::TwoPoint(t) => {
                if u <= t.p_up {
                    t.up
                } else {
                    t.down
                }
            }
        }
    }

    /// Draws from the law of `ξ` given `ξ > u`.
    pub fn sample_above<R: Rng + ?Sized>(&self, u: f64, rng: &mut R) -> Result<f64> {
        if self.tail(u) <= 0.0 {
            return Err(Error::Domain(format!("P(ξ > {u}) = 0 for {self}")));
        }
        let v = open_unit(rng);
        Ok(match self {
            IncrementModel::PolyExp(p) => {
                let y0 = (u + p.shift).max(0.0);
                let level = -v.ln() + p.beta * y0.ln_1p() + p.gamma * y0;
                p.invert_log_tail(level, y0) - p.shift
            }
            IncrementModel::PointMass(pm) => pm.value,
            IncrementModel::TwoPoint(t) => {
                if u < t.down {
                    if v <= t.p_up {
                        t.up
                    } else {
                        t.down
                    }
                } else {
                    t.up
                }
            }
        })
    }

    /// Draws from the law of `ξ` given `ξ ≤ u`.
    pub fn sample_below<R: Rng + ?Sized>(&self, u: f64, rng: &mut R) -> Result<f64> {
        let tail = self.tail(u);
        if tail >= 1.0 {
            return Err(Error::Domain(format!("P(ξ ≤ {u}) = 0 for {self}")));
        }
        let v = open_unit(rng);
        Ok(match self {
            IncrementModel::PolyExp(p) => {
                let target = tail + v * (1.0 - tail);
                p.invert_log_tail(-target.ln(), 0.0) - p.shift
            }
            IncrementModel::PointMass(pm) => pm.value,
            IncrementModel::TwoPoint(t) => {
                if u >= t.up {
                    if v <= t.p_up {
                        t.up
                    } else {
                        t.down
                    }
                } else {
                    t.down
                }
            }
        })
    }
}
