use rayon::prelude::*;

use super::pmf::LatticePmf;

/// Transition kernel of the lattice walk, with cumulative sums for the
/// mass that leaves a window of states in one step.
pub(crate) struct Kernel<'a> {
    pmf: &'a LatticePmf,
    /// `cum[i] = P(index ≤ kmin + i)`.
    cum: Vec<f64>,
    /// `tail[i] = P(index ≥ kmin + i)`, summed from the top.
    tail: Vec<f64>,
}

/// One step of the walk restricted to a window of states.
pub(crate) struct WindowStep {
    pub inside: Vec<f64>,
    /// Mass that stepped below the window.
    pub below: f64,
    /// Mass that stepped above the window.
    pub above: f64,
}

impl<'a> Kernel<'a> {
    pub fn new(pmf: &'a LatticePmf) -> Self {
        let mut cum = Vec::with_capacity(pmf.len());
        let mut acc = 0.0;
        for p in &pmf.probs {
            acc += p;
            cum.push(acc);
        }
        Kernel {
            pmf,
            cum,
            tail: pmf.tail_sums(),
        }
    }

    pub fn kmin(&self) -> i64 {
        self.pmf.min_index
    }

    pub fn kmax(&self) -> i64 {
        self.pmf.max_index()
    }

    pub fn p(&self, k: i64) -> f64 {
        self.pmf.prob(k)
    }

    /// `P(index ≤ m)`.
    pub fn le(&self, m: i64) -> f64 {
        if m < self.kmin() {
            0.0
        } else if m >= self.kmax() {
            *self.cum.last().expect("non-empty")
        } else {
            self.cum[(m - self.kmin()) as usize]
        }
    }

    /// `P(index > m)`.
    pub fn gt(&self, m: i64) -> f64 {
        if m < self.kmin() {
            self.tail[0]
        } else if m >= self.kmax() {
            0.0
        } else {
            self.tail[(m + 1 - self.kmin()) as usize]
        }
    }

    /// Advances a sub-probability vector on states `lo..=lo+len−1` by one
    /// step. Each output bin is summed over source states in increasing
    /// order, so the result does not depend on the thread count.
    pub fn step_window(&self, cur: &[f64], lo: i64) -> WindowStep {
        let len = cur.len() as i64;
        let hi = lo + len - 1;
        let (kmin, kmax) = (self.kmin(), self.kmax());
        let probs = &self.pmf.probs;
        let inside = (0..len as usize)
            .into_par_iter()
            .with_min_len(32)
            .map(|jj| {
                let jj = jj as i64;
                // Source offsets ii with kmin ≤ jj − ii ≤ kmax.
                let from = (jj - kmax).max(0);
                let to = (jj - kmin).min(len - 1);
                let mut acc = 0.0;
                for ii in from..=to {
                    acc += cur[ii as usize] * probs[(jj - ii - kmin) as usize];
                }
                acc
            })
            .collect();
        let mut below = 0.0;
        let mut above = 0.0;
        for (ii, &c) in cur.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let i = lo + ii as i64;
            below += c * self.le(lo - 1 - i);
            above += c * self.gt(hi - i);
        }
        WindowStep { inside, below, above }
    }
}
