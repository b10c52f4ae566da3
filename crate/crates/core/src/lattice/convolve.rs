use rayon::prelude::*;
use rustfft::{num_complex::Complex, FftPlanner};
use serde::{Deserialize, Serialize};

use super::pmf::{snap, LatticePmf, TailCertificate};
use crate::error::Result;

/// Convolution backend. Direct summation is the default: each output bin
/// is summed in a fixed order, so results are bitwise reproducible and
/// deep tails keep full relative precision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConvolutionMethod {
    #[default]
    Direct,
    Fft,
}

/// Law of the sum of independent variables with laws `a` and `b`.
pub fn convolve(a: &LatticePmf, b: &LatticePmf) -> Result<LatticePmf> {
    convolve_with(a, b, ConvolutionMethod::Direct)
}

pub fn convolve_with(a: &LatticePmf, b: &LatticePmf, method: ConvolutionMethod) -> Result<LatticePmf> {
    a.check_step(b)?;
    let probs = match method {
        ConvolutionMethod::Direct => direct(&a.probs, &b.probs),
        ConvolutionMethod::Fft => fft(&a.probs, &b.probs),
    };
    Ok(LatticePmf {
        step: a.step,
        min_index: a.min_index + b.min_index,
        probs,
        mass_below: a.mass_below + b.mass_below,
        mass_above: a.mass_above + b.mass_above,
        certificate: TailCertificate::None,
    })
}

/// `n`-fold self-convolution.
pub fn convolve_power(pmf: &LatticePmf, n: usize) -> Result<LatticePmf> {
    convolve_power_with(pmf, n, ConvolutionMethod::Direct)
}

pub fn convolve_power_with(pmf: &LatticePmf, n: usize, method: ConvolutionMethod) -> Result<LatticePmf> {
    if n == 0 {
        return Ok(LatticePmf::dirac(pmf.step, 0));
    }
    let mut acc = pmf.clone();
    for _ in 1..n {
        acc = convolve_with(&acc, pmf, method)?;
    }
    if n == 1 {
        acc.certificate = pmf.certificate;
    } else {
        acc.certificate = TailCertificate::None;
    }
    Ok(acc)
}

/// One row of [`convolution_power_tail`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerTailRow {
    pub x: f64,
    /// Cell boundary at which the lattice tails correspond to continuous
    /// tails.
    pub snapped_x: f64,
    /// Tail of the `n`-fold convolution.
    pub tail_n: f64,
    /// Tail of the law itself.
    pub tail_1: f64,
}

impl PowerTailRow {
    pub fn ratio(&self) -> f64 {
        self.tail_n / self.tail_1
    }
}

/// Tails of the `n`-fold convolution at the points of `xs`, beside the
/// tail of the law itself.
pub fn convolution_power_tail(pmf: &LatticePmf, n: usize, xs: &[f64]) -> Result<Vec<PowerTailRow>> {
    convolution_power_tail_with(pmf, n, xs, ConvolutionMethod::Direct)
}

pub fn convolution_power_tail_with(
    pmf: &LatticePmf,
    n: usize,
    xs: &[f64],
    method: ConvolutionMethod,
) -> Result<Vec<PowerTailRow>> {
    if n == 0 {
        return Err(crate::error::Error::Param {
            name: "n",
            reason: "must be ≥ 1".into(),
        });
    }
    let power = convolve_power_with(pmf, n, method)?;
    Ok(xs
        .iter()
        .map(|&x| PowerTailRow {
            x,
            snapped_x: snap(x, pmf.step),
            tail_n: power.tail(x),
            tail_1: pmf.tail(x),
        })
        .collect())
}

/// Direct summation; output bin `j` sums `a[i]·b[j−i]` over increasing `i`.
pub(crate) fn direct(a: &[f64], b: &[f64]) -> Vec<f64> {
    let n = a.len() + b.len() - 1;
    (0..n)
        .into_par_iter()
        .with_min_len(64)
        .map(|j| {
            let lo = j.saturating_sub(b.len() - 1);
            let hi = j.min(a.len() - 1);
            (lo..=hi).map(|i| a[i] * b[j - i]).sum()
        })
        .collect()
}

fn fft(a: &[f64], b: &[f64]) -> Vec<f64> {
    let n = a.len() + b.len() - 1;
    let size = n.next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let forward = planner.plan_fft_forward(size);
    let inverse = planner.plan_fft_inverse(size);
    let pad = |v: &[f64]| {
        let mut buf: Vec<Complex<f64>> = v.iter().map(|&x| Complex::new(x, 0.0)).collect();
        buf.resize(size, Complex::new(0.0, 0.0));
        buf
    };
    let (mut fa, mut fb) = (pad(a), pad(b));
    forward.process(&mut fa);
    forward.process(&mut fb);
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x *= y;
    }
    inverse.process(&mut fa);
    let scale = 1.0 / size as f64;
    // Round-off can leave tiny negative values in empty bins.
    fa[..n].iter().map(|c| (c.re * scale).max(0.0)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_pmf(rng: &mut ChaCha8Rng, len: usize, min_index: i64) -> LatticePmf {
        let raw: Vec<f64> = (0..len).map(|_| rng.random::<f64>()).collect();
        let total: f64 = raw.iter().sum();
        LatticePmf::new(0.1, min_index, raw.iter().map(|x| x / total).collect()).unwrap()
    }

    #[test]
    fn point_masses_add() {
        let a = LatticePmf::dirac(1.0, -1);
        let c = convolve(&a, &a).unwrap();
        assert_eq!(c.min_index, -2);
        assert_eq!(c.probs, vec![1.0]);
    }

    #[test]
    fn binomial_square() {
        let a = LatticePmf::new(1.0, -1, vec![0.75, 0.0, 0.25]).unwrap();
        let c = convolve(&a, &a).unwrap();
        assert_eq!(c.min_index, -2);
        let want = [9.0 / 16.0, 0.0, 6.0 / 16.0, 0.0, 1.0 / 16.0];
        for (got, want) in c.probs.iter().zip(want) {
            assert!((got - want).abs() < 1e-15);
        }
    }

    #[test]
    fn fft_matches_direct_on_random_inputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for trial in 0..20 {
            let a = random_pmf(&mut rng, 64, -30);
            let b = random_pmf(&mut rng, 64, trial - 10);
            let d = convolve_with(&a, &b, ConvolutionMethod::Direct).unwrap();
            let f = convolve_with(&a, &b, ConvolutionMethod::Fft).unwrap();
            assert_eq!(d.min_index, f.min_index);
            let err = d
                .probs
                .iter()
                .zip(&f.probs)
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max);
            assert!(err < 1e-12, "trial {trial}: {err:e}");
        }
    }

    #[test]
    fn step_mismatch_is_an_error() {
        let a = LatticePmf::dirac(1.0, 0);
        let b = LatticePmf::dirac(0.5, 0);
        assert!(convolve(&a, &b).is_err());
    }

    #[test]
    fn powers() {
        let a = LatticePmf::new(1.0, -1, vec![0.75, 0.0, 0.25]).unwrap();
        let p3 = convolve_power(&a, 3).unwrap();
        assert_eq!(p3.min_index, -3);
        assert!((p3.prob(3) - 1.0 / 64.0).abs() < 1e-15);
        assert_eq!(convolve_power(&a, 1).unwrap().probs, a.probs);
        assert_eq!(convolve_power(&a, 0).unwrap().probs, vec![1.0]);
    }

    #[test]
    fn power_tail_of_one_is_the_law() {
        let a = LatticePmf::new(1.0, -1, vec![0.75, 0.0, 0.25]).unwrap();
        let rows = convolution_power_tail(&a, 1, &[-1.5, 0.0, 0.5]).unwrap();
        for r in &rows {
            assert_eq!(r.tail_n, r.tail_1);
        }
        let rows = convolution_power_tail(&a, 2, &[0.5, 1.5]).unwrap();
        assert!((rows[0].tail_n - 1.0 / 16.0).abs() < 1e-15);
        assert!(convolution_power_tail(&a, 0, &[0.0]).is_err());
    }
}
