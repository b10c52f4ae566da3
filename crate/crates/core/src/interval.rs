use serde::{Deserialize, Serialize};

/// A point value with a certified enclosing interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub value: f64,
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(value: f64, lo: f64, hi: f64) -> Self {
        debug_assert!(lo <= value && value <= hi, "{lo} ≤ {value} ≤ {hi}");
        Interval { value, lo, hi }
    }

    pub fn exact(value: f64) -> Self {
        Interval {
            value,
            lo: value,
            hi: value,
        }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    /// Multiplies by a positive constant.
    pub fn scale(&self, c: f64) -> Self {
        debug_assert!(c >= 0.0);
        Interval {
            value: self.value * c,
            lo: self.lo * c,
            hi: self.hi * c,
        }
    }

    pub fn add(&self, other: &Interval) -> Self {
        Interval {
            value: self.value + other.value,
            lo: self.lo + other.lo,
            hi: self.hi + other.hi,
        }
    }
}
