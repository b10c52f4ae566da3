//! Adaptive Simpson quadrature with an absolute error target and a hard cap
//! on integrand evaluations.

use crate::error::{Error, Result};

pub const DEFAULT_ABS_TOL: f64 = 1e-10;
pub const DEFAULT_NODE_CAP: usize = 1_000_000;

#[derive(Debug, Clone, Copy)]
pub struct Quadrature {
    pub value: f64,
    /// Sum of the local Richardson error estimates.
    pub error: f64,
    pub nodes: usize,
}

struct Panel {
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
}

const MAX_DEPTH: u32 = 60;

/// Integrates `f` over `[a, b]` to absolute tolerance `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<Quadrature> {
    integrate_capped(f, a, b, tol, DEFAULT_NODE_CAP)
}

pub fn integrate_capped<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64, node_cap: usize) -> Result<Quadrature> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Domain(format!("integration limits must be finite: [{a}, {b}]")));
    }
    if b <= a {
        return Ok(Quadrature {
            value: 0.0,
            error: 0.0,
            nodes: 0,
        });
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let mut nodes = 3;
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let mut stack = vec![Panel {
        a,
        b,
        fa,
        fm,
        fb,
        whole,
        tol,
        depth: 0,
    }];
    let mut value = 0.0;
    let mut error = 0.0;
    let mut capped = false;

    while let Some(p) = stack.pop() {
        let m = 0.5 * (p.a + p.b);
        let lm = 0.5 * (p.a + m);
        let rm = 0.5 * (m + p.b);
        let flm = f(lm);
        let frm = f(rm);
        nodes += 2;
        let left = (m - p.a) / 6.0 * (p.fa + 4.0 * flm + p.fm);
        let right = (p.b - m) / 6.0 * (p.fm + 4.0 * frm + p.fb);
        let delta = left + right - p.whole;
        let local = delta.abs() / 15.0;
        if local <= p.tol || p.depth >= MAX_DEPTH || nodes >= node_cap {
            if local > p.tol {
                capped = true;
            }
            value += left + right + delta / 15.0;
            error += local;
            continue;
        }
        let half = 0.5 * p.tol;
        stack.push(Panel {
            a: m,
            b: p.b,
            fa: p.fm,
            fm: frm,
            fb: p.fb,
            whole: right,
            tol: half,
            depth: p.depth + 1,
        });
        stack.push(Panel {
            a: p.a,
            b: m,
            fa: p.fa,
            fm: flm,
            fb: p.fm,
            whole: left,
            tol: half,
            depth: p.depth + 1,
        });
    }

    if !value.is_finite() {
        return Err(Error::Domain("integrand produced a non-finite value".into()));
    }
    if capped && error > tol {
        return Err(Error::Quadrature {
            achieved: error,
            target: tol,
        });
    }
    Ok(Quadrature { value, error, nodes })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let q = integrate(|x| x * x * x - 2.0 * x, 0.0, 3.0, 1e-12).unwrap();
        assert!((q.value - (81.0 / 4.0 - 9.0)).abs() < 1e-12);
    }

    #[test]
    fn exponential_integral() {
        let q = integrate(|x: f64| (-x).exp(), 0.0, 40.0, 1e-10).unwrap();
        assert!((q.value - (1.0 - (-40.0f64).exp())).abs() < 1e-10);
    }

    #[test]
    fn empty_interval() {
        assert_eq!(integrate(|x| x, 2.0, 1.0, 1e-10).unwrap().value, 0.0);
    }

    #[test]
    fn node_cap_reports_achieved_tolerance() {
        let err = integrate_capped(|x: f64| (1.0 / x).sin(), 1e-6, 1.0, 1e-14, 50).unwrap_err();
        assert!(matches!(err, Error::Quadrature { .. }));
    }
}
