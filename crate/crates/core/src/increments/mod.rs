//! Increment laws for the random walk.
//!
//! `PolyExp` is the in-class family used for every theorem experiment: the
//! increment is `ξ = η − d` where `η ≥ 0` has tail
//! `P(η > y) = (1 + y)^{-β} e^{-γ y}`. Since `e^{γy} P(η > y)` is regularly
//! varying, the law lies in `S_γ`, and its twisted moment
//! `φ(γ) = e^{-γd} (1 + γ/(β − 1))` is available in closed form.
//!
//! `PointMass` and `TwoPoint` are lattice laws. They are not in the class
//! (their tails are step functions) and exist to validate the oracles
//! against closed forms.

mod diagnostics;
mod sampling;
mod spec;

pub use diagnostics::{lgamma_diagnostic, sgamma_diagnostic, LgammaReport, LgammaRow, SgammaReport, SgammaRow};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature;

/// Beyond this value of `γ (x + d)` tails are evaluated through their
/// logarithm.
pub const LOG_DOMAIN_THRESHOLD: f64 = 600.0;

/// Remainder allowed when truncating the substituted mgf integral.
const MGF_TAIL_REMAINDER: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    PolyExp,
    PointMass,
    TwoPoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolyExp {
    gamma: f64,
    beta: f64,
    shift: f64,
}

impl PolyExp {
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    /// `ln P(η > y)` for `y ≥ 0`.
    fn log_tail_eta(&self, y: f64) -> f64 {
        -self.beta * y.ln_1p() - self.gamma * y
    }

    fn tail_eta(&self, y: f64) -> f64 {
        if y <= 0.0 {
            1.0
        } else if self.gamma * y > LOG_DOMAIN_THRESHOLD {
            self.log_tail_eta(y).exp()
        } else {
            (1.0 + y).powf(-self.beta) * (-self.gamma * y).exp()
        }
    }

    fn phi_hat(&self) -> f64 {
        (-self.gamma * self.shift).exp() * (1.0 + self.gamma / (self.beta - 1.0))
    }

    /// `∫_0^∞ e^{αy} P(η > y) dy` for `α ≤ γ`, via `y = e^s − 1`.
    fn twisted_tail_integral(&self, alpha: f64) -> Result<f64> {
        let (g, b) = (self.gamma, self.beta);
        // Remainder past s_max is at most e^{(1−β)s_max}/(β−1).
        let s_max = ((b - 1.0) * MGF_TAIL_REMAINDER).ln() / (1.0 - b);
        let q = quadrature::integrate(
            |s: f64| ((alpha - g) * s.exp_m1() + (1.0 - b) * s).exp(),
            0.0,
            s_max,
            quadrature::DEFAULT_ABS_TOL,
        )?;
        Ok(q.value)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointMass {
    value: f64,
}

impl PointMass {
    pub fn value(&self) -> f64 {
        self.value
    }
}

/// `up` with probability `p_up`, `down` otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoPoint {
    up: f64,
    p_up: f64,
    down: f64,
}

impl TwoPoint {
    pub fn up(&self) -> f64 {
        self.up
    }

    pub fn p_up(&self) -> f64 {
        self.p_up
    }

    pub fn down(&self) -> f64 {
        self.down
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum IncrementModel {
    PolyExp(PolyExp),
    PointMass(PointMass),
    TwoPoint(TwoPoint),
}

/// `E e^{αξ}`; `value` is `+∞` when the moment diverges.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MgfValue {
    pub alpha: f64,
    pub value: f64,
    pub finite: bool,
}

impl MgfValue {
    fn finite(alpha: f64, value: f64) -> Self {
        MgfValue {
            alpha,
            value,
            finite: true,
        }
    }

    fn infinite(alpha: f64) -> Self {
        MgfValue {
            alpha,
            value: f64::INFINITY,
            finite: false,
        }
    }
}

/// Choice of the cut-off function `h(x)` used by the class diagnostic and
/// the big-jump events (`h(x) ≤ x/2`, `h(x) → ∞`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HChoice {
    Quarter,
    Sqrt,
}

impl HChoice {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            HChoice::Quarter => x / 4.0,
            HChoice::Sqrt => x.max(0.0).sqrt().min(x / 2.0),
        }
    }
}

impl std::str::FromStr for HChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quarter" => Ok(HChoice::Quarter),
            "sqrt" => Ok(HChoice::Sqrt),
            other => Err(Error::Spec {
                token: other.to_string(),
                reason: "expected `quarter` or `sqrt`".into(),
            }),
        }
    }
}

impl std::fmt::Display for HChoice {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            HChoice::Quarter => "quarter",
            HChoice::Sqrt => "sqrt",
        })
    }
}

fn check_finite(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::Param {
            name,
            reason: format!("must be finite, got {v}"),
        })
    }
}

impl IncrementModel {
    pub fn poly_exp(gamma: f64, beta: f64, shift: f64) -> Result<Self> {
        check_finite("gamma", gamma)?;
        check_finite("beta", beta)?;
        check_finite("shift", shift)?;
        if gamma <= 0.0 {
            return Err(Error::Param {
                name: "gamma",
                reason: format!("must be > 0, got {gamma}"),
            });
        }
        if beta <= 1.0 {
            return Err(Error::Param {
                name: "beta",
                reason: format!("must be > 1, got {beta}"),
            });
        }
        Ok(IncrementModel::PolyExp(PolyExp { gamma, beta, shift }))
    }

    pub fn point_mass(value: f64) -> Result<Self> {
        check_finite("v", value)?;
        Ok(IncrementModel::PointMass(PointMass { value }))
    }

    pub fn two_point(up: f64, p_up: f64, down: f64) -> Result<Self> {
        check_finite("u", up)?;
        check_finite("pu", p_up)?;
        check_finite("v", down)?;
        if !(p_up > 0.0 && p_up < 1.0) {
            return Err(Error::Param {
                name: "pu",
                reason: format!("must lie in (0, 1), got {p_up}"),
            });
        }
        if up <= down {
            return Err(Error::Param {
                name: "u",
                reason: format!("must exceed v = {down}, got {up}"),
            });
        }
        Ok(IncrementModel::TwoPoint(TwoPoint { up, p_up, down }))
    }

    /// Reference model `PolyExp(γ = 1, β = 2, d = ln 4)` with `φ(γ) = 1/2`.
    pub fn reference() -> Self {
        IncrementModel::poly_exp(1.0, 2.0, 4f64.ln()).expect("valid reference parameters")
    }

    pub fn family(&self) -> Family {
        match self {
            IncrementModel::PolyExp(_) => Family::PolyExp,
            IncrementModel::PointMass(_) => Family::PointMass,
            IncrementModel::TwoPoint(_) => Family::TwoPoint,
        }
    }

    /// Whether the law belongs to the twisted class; lattice families are
    /// flagged `not_in_class`.
    pub fn in_class(&self) -> bool {
        matches!(self, IncrementModel::PolyExp(_))
    }

    pub fn gamma(&self) -> Option<f64> {
        match self {
            IncrementModel::PolyExp(p) => Some(p.gamma),
            _ => None,
        }
    }

    /// `φ(γ)`, defined for in-class laws only.
    pub fn phi_hat(&self) -> Option<f64> {
        match self {
            IncrementModel::PolyExp(p) => Some(p.phi_hat()),
            _ => None,
        }
    }

    /// Checks the regime of the main theorems: in class, `φ(γ) < 1` and a
    /// negative mean.
    pub fn require_theorem_regime(&self) -> Result<()> {
        let phg = self
            .phi_hat()
            .ok_or_else(|| Error::Regime(format!("{self} is not in the twisted class (not_in_class)")))?;
        if phg >= 1.0 {
            return Err(Error::Regime(format!("φ(γ) = {phg} ≥ 1 for {self}")));
        }
        let mean = self.mean()?;
        if mean >= 0.0 {
            return Err(Error::Drift(mean));
        }
        Ok(())
    }

    /// `P(ξ > x)`.
    pub fn tail(&self, x: f64) -> f64 {
        match self {
            IncrementModel::PolyExp(p) => p.tail_eta(x + p.shift),
            IncrementModel::PointMass(p) => {
                if x < p.value {
                    1.0
                } else {
                    0.0
                }
            }
            IncrementModel::TwoPoint(t) => {
                if x < t.down {
                    1.0
                } else if x < t.up {
                    t.p_up
                } else {
                    0.0
                }
            }
        }
    }

    /// `ln P(ξ > x)`, `−∞` where the tail vanishes.
    pub fn log_tail(&self, x: f64) -> f64 {
        match self {
            IncrementModel::PolyExp(p) => {
                let y = x + p.shift;
                if y <= 0.0 {
                    0.0
                } else {
                    p.log_tail_eta(y)
                }
            }
            _ => self.tail(x).ln(),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        1.0 - self.tail(x)
    }

    /// Lebesgue density, for the continuous family.
    pub fn density(&self, x: f64) -> Option<f64> {
        match self {
            IncrementModel::PolyExp(p) => {
                let y = x + p.shift;
                if y < 0.0 {
                    return Some(0.0);
                }
                Some(p.tail_eta(y) * (p.beta / (1.0 + y) + p.gamma))
            }
            _ => None,
        }
    }

    /// Atoms `(value, probability)` of the lattice families.
    pub fn atoms(&self) -> Option<Vec<(f64, f64)>> {
        match self {
            IncrementModel::PolyExp(_) => None,
            IncrementModel::PointMass(p) => Some(vec![(p.value, 1.0)]),
            IncrementModel::TwoPoint(t) => Some(vec![(t.down, 1.0 - t.p_up), (t.up, t.p_up)]),
        }
    }

    pub fn support_min(&self) -> f64 {
        match self {
            IncrementModel::PolyExp(p) => -p.shift,
            IncrementModel::PointMass(p) => p.value,
            IncrementModel::TwoPoint(t) => t.down,
        }
    }

    pub fn support_max(&self) -> f64 {
        match self {
            IncrementModel::PolyExp(_) => f64::INFINITY,
            IncrementModel::PointMass(p) => p.value,
            IncrementModel::TwoPoint(t) => t.up,
        }
    }

    /// `E e^{αξ}` for `α ≥ 0`. Closed forms where available, otherwise
    /// adaptive quadrature at absolute tolerance `1e-10`.
    pub fn mgf(&self, alpha: f64) -> Result<MgfValue> {
        if !(alpha >= 0.0) {
            return Err(Error::Param {
                name: "alpha",
                reason: format!("must be ≥ 0, got {alpha}"),
            });
        }
        match self {
            IncrementModel::PolyExp(p) => {
                if alpha > p.gamma {
                    Ok(MgfValue::infinite(alpha))
                } else if alpha == p.gamma {
                    Ok(MgfValue::finite(alpha, p.phi_hat()))
                } else if alpha == 0.0 {
                    Ok(MgfValue::finite(alpha, 1.0))
                } else {
                    self.mgf_quadrature(alpha)
                }
            }
            IncrementModel::PointMass(pm) => Ok(MgfValue::finite(alpha, (alpha * pm.value).exp())),
            IncrementModel::TwoPoint(t) => Ok(MgfValue::finite(
                alpha,
                t.p_up * (alpha * t.up).exp() + (1.0 - t.p_up) * (alpha * t.down).exp(),
            )),
        }
    }

    /// Quadrature route for the mgf of the continuous family, used to
    /// cross-check the closed form at `α = γ`.
    pub fn mgf_quadrature(&self, alpha: f64) -> Result<MgfValue> {
        match self {
            IncrementModel::PolyExp(p) => {
                if alpha > p.gamma {
                    return Ok(MgfValue::infinite(alpha));
                }
                // E e^{αη} = 1 + α ∫_0^∞ e^{αy} P(η > y) dy.
                let integral = p.twisted_tail_integral(alpha)?;
                Ok(MgfValue::finite(
                    alpha,
                    (-alpha * p.shift).exp() * (1.0 + alpha * integral),
                ))
            }
            _ => self.mgf(alpha),
        }
    }

    pub fn mean(&self) -> Result<f64> {
        match self {
            IncrementModel::PolyExp(p) => Ok(p.twisted_tail_integral(0.0)? - p.shift),
            IncrementModel::PointMass(pm) => Ok(pm.value),
            IncrementModel::TwoPoint(t) => Ok(t.p_up * t.up + (1.0 - t.p_up) * t.down),
        }
    }

    /// `E[e^{γξ}; ξ > u]` at the model's own `γ`.
    pub fn tilted_tail(&self, u: f64) -> Option<f64> {
        match self {
            IncrementModel::PolyExp(p) => {
                let y = (u + p.shift).max(0.0);
                let (g, b) = (p.gamma, p.beta);
                Some((-g * p.shift).exp() * ((1.0 + y).powf(-b) + g * (1.0 + y).powf(1.0 - b) / (b - 1.0)))
            }
            _ => None,
        }
    }

    /// Certified upper bound on `P(M > y)` for the walk driven by this law:
    /// `e^{-γy}/(1 − φ(γ))` in class, the Lundberg bound `e^{-Ry}` for
    /// lattice laws with a positive atom.
    pub fn max_tail_bound(&self, y: f64) -> f64 {
        if y < 0.0 {
            return 1.0;
        }
        match self {
            IncrementModel::PolyExp(p) => {
                let phg = p.phi_hat();
                if phg < 1.0 {
                    ((-p.gamma * y).exp() / (1.0 - phg)).min(1.0)
                } else {
                    1.0
                }
            }
            IncrementModel::PointMass(pm) => {
                if pm.value <= 0.0 {
                    0.0
                } else {
                    1.0
                }
            }
            IncrementModel::TwoPoint(t) => {
                if t.up <= 0.0 {
                    0.0
                } else {
                    match self.lundberg_root() {
                        Some(r) => (-r * y).exp().min(1.0),
                        None => 1.0,
                    }
                }
            }
        }
    }

    /// Positive root `R` of `E e^{Rξ} = 1` for lattice laws with a positive
    /// atom and negative mean.
    pub fn lundberg_root(&self) -> Option<f64> {
        match self {
            IncrementModel::TwoPoint(t) if t.up > 0.0 && self.mean().ok()? < 0.0 => {
                let log_mgf = |r: f64| {
                    let a = t.p_up.ln() + r * t.up;
                    let b = (1.0 - t.p_up).ln() + r * t.down;
                    let m = a.max(b);
                    m + ((a - m).exp() + (b - m).exp()).ln()
                };
                Some(bisect_increasing_root(log_mgf))
            }
            _ => None,
        }
    }

    /// An exponent `α > 0` with `E e^{αξ} < 1`, and that moment. Drives the
    /// Chernoff remainders `P(S_n > x) ≤ φ(α)^n e^{-αx}`.
    pub fn drift_exponent(&self) -> Option<(f64, f64)> {
        match self {
            IncrementModel::PolyExp(p) => {
                let phg = p.phi_hat();
                (phg < 1.0).then_some((p.gamma, phg))
            }
            IncrementModel::PointMass(pm) => (pm.value < 0.0).then(|| (1.0, pm.value.exp())),
            IncrementModel::TwoPoint(t) => {
                let q = 1.0 - t.p_up;
                let alpha = if t.up <= 0.0 {
                    1.0
                } else {
                    (-q * t.down / (t.p_up * t.up)).ln() / (t.up - t.down)
                };
                if !(alpha > 0.0) {
                    return None;
                }
                let m = t.p_up * (alpha * t.up).exp() + q * (alpha * t.down).exp();
                (m < 1.0).then_some((alpha, m))
            }
        }
    }

    /// Certified lower bound on `P(M > x)`: `max_n P(ξ > x/n)^n`, the chance
    /// that each of the first `n` steps clears `x/n`.
    pub fn max_tail_lower_bound(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 1.0;
        }
        (1..=64)
            .map(|n| {
                let t = self.tail(x / n as f64);
                if t > 0.0 {
                    (n as f64 * t.ln()).exp()
                } else {
                    0.0
                }
            })
            .fold(0.0, f64::max)
    }
}

/// Positive root of a convex function `g` with `g(0) = 0`, `g'(0) < 0` and
/// `g → ∞`.
pub(crate) fn bisect_increasing_root<G: Fn(f64) -> f64>(g: G) -> f64 {
    let mut hi = 1.0;
    while g(hi) <= 0.0 {
        hi *= 2.0;
    }
    let mut lo = hi / 2.0;
    while g(lo) > 0.0 {
        lo /= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    lo
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pe(g: f64, b: f64, d: f64) -> IncrementModel {
        IncrementModel::poly_exp(g, b, d).unwrap()
    }

    #[test]
    fn tail_examples() {
        let m = pe(1.0, 2.0, 0.0);
        assert_eq!(m.tail(0.0), 1.0);
        let expected = 0.25 * (-1.0f64).exp();
        assert!((m.tail(1.0) - expected).abs() < 1e-15);
        assert!((m.tail(1.0) - 0.0919699).abs() < 1e-7);
        assert_eq!(IncrementModel::point_mass(-1.0).unwrap().tail(0.0), 0.0);
    }

    #[test]
    fn tail_matches_density_quadrature() {
        let m = pe(1.0, 2.0, 0.0);
        let q = quadrature::integrate(|y| m.density(y).unwrap(), 1.0, 60.0, 1e-13).unwrap();
        assert!((q.value - m.tail(1.0)).abs() < 1e-11);
    }

    #[test]
    fn tail_boundary_is_one_at_minus_shift() {
        let m = pe(2.0, 3.0, 1.5);
        assert_eq!(m.tail(-1.5), 1.0);
        assert!(m.tail(-1.5 + 1e-9) < 1.0);
    }

    #[test]
    fn log_domain_tail_beyond_underflow() {
        let m = pe(1.0, 2.0, 0.0);
        assert_eq!(m.tail(2000.0), 0.0);
        let lt = m.log_tail(2000.0);
        assert!((lt - (-2.0 * 2001f64.ln() - 2000.0)).abs() < 1e-9);
    }

    #[test]
    fn mgf_examples() {
        let m = pe(1.0, 2.0, 0.0);
        assert_eq!(m.mgf(1.0).unwrap().value, 2.0);
        let q = m.mgf_quadrature(1.0).unwrap();
        assert!((q.value - 2.0).abs() < 1e-8);
        let r = IncrementModel::reference();
        assert!((r.mgf(1.0).unwrap().value - 0.5).abs() < 1e-15);
        let pm = IncrementModel::point_mass(-1.0).unwrap();
        assert!((pm.mgf(0.7).unwrap().value - (-0.7f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn mgf_infinite_beyond_gamma_and_one_at_zero() {
        let m = pe(1.0, 2.0, 0.3);
        let v = m.mgf(1.2).unwrap();
        assert!(!v.finite && v.value.is_infinite());
        for model in [
            m,
            IncrementModel::point_mass(-2.0).unwrap(),
            IncrementModel::two_point(1.0, 0.25, -1.0).unwrap(),
        ] {
            assert_eq!(model.mgf(0.0).unwrap().value, 1.0);
        }
        assert!(m.mgf(-0.1).is_err());
    }

    #[test]
    fn closed_form_phi_hat_matches_quadrature_on_grid() {
        for &g in &[0.5, 1.0, 2.0] {
            for &b in &[1.5, 2.0, 3.0] {
                for &d in &[0.5, 1.0, 2.0] {
                    let m = pe(g, b, d);
                    let closed = m.phi_hat().unwrap();
                    let quad = m.mgf_quadrature(g).unwrap().value;
                    assert!((closed - quad).abs() < 1e-8, "γ={g} β={b} d={d}: {closed} vs {quad}");
                }
            }
        }
    }

    #[test]
    fn reference_mean_is_negative() {
        // E η = 1 − e E_1(1) for β = 2, γ = 1.
        let m = IncrementModel::reference();
        let e1 = 0.219_383_934_395_520_3;
        let expected = 1.0 - std::f64::consts::E * e1 - 4f64.ln();
        assert!((m.mean().unwrap() - expected).abs() < 1e-9);
        m.require_theorem_regime().unwrap();
    }

    #[test]
    fn regime_rejects_phi_hat_at_least_one() {
        let m = pe(1.0, 2.0, 0.0);
        assert!(matches!(m.require_theorem_regime(), Err(Error::Regime(_))));
        let tp = IncrementModel::two_point(1.0, 0.25, -1.0).unwrap();
        assert!(matches!(tp.require_theorem_regime(), Err(Error::Regime(_))));
    }

    #[test]
    fn constructor_validation() {
        assert!(IncrementModel::poly_exp(-1.0, 2.0, 0.0).is_err());
        assert!(IncrementModel::poly_exp(1.0, 1.0, 0.0).is_err());
        assert!(IncrementModel::two_point(1.0, 1.5, -1.0).is_err());
        assert!(IncrementModel::two_point(-1.0, 0.5, 1.0).is_err());
    }

    #[test]
    fn twisted_tail_mass_at_bottom_is_phi_hat() {
        let m = IncrementModel::reference();
        assert!((m.tilted_tail(-10.0).unwrap() - 0.5).abs() < 1e-15);
        let direct = quadrature::integrate(|x: f64| x.exp() * m.density(x).unwrap(), 3.0, 400.0, 1e-12).unwrap();
        // Truncated at 400; the remainder is ≈ 0.25/400.
        let exact = m.tilted_tail(3.0).unwrap();
        let rest = m.tilted_tail(400.0).unwrap();
        assert!((direct.value + rest - exact).abs() < 1e-9);
    }

    #[test]
    fn two_point_lundberg_root() {
        let m = IncrementModel::two_point(1.0, 0.25, -1.0).unwrap();
        assert!((m.lundberg_root().unwrap() - 3f64.ln()).abs() < 1e-12);
        assert!((m.max_tail_bound(2.0) - 1.0 / 9.0).abs() < 1e-12);
    }

    #[test]
    fn drift_exponents_have_moment_below_one() {
        for m in [
            IncrementModel::reference(),
            IncrementModel::two_point(1.0, 0.25, -1.0).unwrap(),
            IncrementModel::two_point(3.0, 0.2, -1.0).unwrap(),
            IncrementModel::point_mass(-1.0).unwrap(),
        ] {
            let (a, phi) = m.drift_exponent().unwrap();
            assert!(a > 0.0 && phi < 1.0);
            assert!((m.mgf(a).unwrap().value - phi).abs() < 1e-12);
        }
    }

    #[test]
    fn twisted_tail_weight_strictly_decreases() {
        // e^{γx} P(ξ > x) → 0 strictly.
        let m = IncrementModel::reference();
        let mut prev = f64::INFINITY;
        for i in 0..50 {
            let x = i as f64 * 2.0;
            let g = m.tail(x) * x.exp();
            assert!(g < prev);
            prev = g;
        }
    }

    #[test]
    fn h_choices() {
        assert_eq!(HChoice::Quarter.apply(80.0), 20.0);
        assert!((HChoice::Sqrt.apply(80.0) - 80f64.sqrt()).abs() < 1e-15);
        assert_eq!(HChoice::Sqrt.apply(1.0), 0.5);
        assert_eq!("sqrt".parse::<HChoice>().unwrap(), HChoice::Sqrt);
    }
}
