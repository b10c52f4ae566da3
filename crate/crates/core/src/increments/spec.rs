//! Text form of a model: `polyexp:gamma=<f>,beta=<f>,shift=<f>`,
//! `pointmass:v=<f>` or `twopoint:u=<f>,pu=<f>,v=<f>`.

use std::fmt;
use std::str::FromStr;

use super::IncrementModel;
use crate::error::{Error, Result};

fn spec_err(token: &str, reason: impl Into<String>) -> Error {
    Error::Spec {
        token: token.to_string(),
        reason: reason.into(),
    }
}

fn parse_params(body: &str, allowed: &[&'static str]) -> Result<Vec<(&'static str, f64)>> {
    let mut out: Vec<(&'static str, f64)> = Vec::new();
    for part in body.split(',') {
        let (key, value) = part
            .split_once('=')
            .ok_or_else(|| spec_err(part, "expected key=value"))?;
        let key = key.trim();
        let name = allowed.iter().find(|k| **k == key).ok_or_else(|| {
            spec_err(
                key,
                format!("unknown parameter (expected one of {})", allowed.join(", ")),
            )
        })?;
        if out.iter().any(|(k, _)| k == name) {
            return Err(spec_err(key, "duplicate parameter"));
        }
        let v: f64 = value.trim().parse().map_err(|_| spec_err(value, "not a number"))?;
        out.push((name, v));
    }
    for k in allowed {
        if !out.iter().any(|(n, _)| n == k) {
            return Err(spec_err(body, format!("missing parameter `{k}`")));
        }
    }
    Ok(out)
}

fn get(params: &[(&'static str, f64)], key: &str) -> f64 {
    params
        .iter()
        .find(|(k, _)| *k == key)
        .map(|(_, v)| *v)
        .expect("checked by parse_params")
}

impl FromStr for IncrementModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (family, body) = s
            .split_once(':')
            .ok_or_else(|| spec_err(s, "expected <family>:<params>"))?;
        match family {
            "polyexp" => {
                let p = parse_params(body, &["gamma", "beta", "shift"])?;
                IncrementModel::poly_exp(get(&p, "gamma"), get(&p, "beta"), get(&p, "shift"))
            }
            "pointmass" => {
                let p = parse_params(body, &["v"])?;
                IncrementModel::point_mass(get(&p, "v"))
            }
            "twopoint" => {
                let p = parse_params(body, &["u", "pu", "v"])?;
                IncrementModel::two_point(get(&p, "u"), get(&p, "pu"), get(&p, "v"))
            }
            other => Err(spec_err(
                other,
                "unknown family (expected polyexp, pointmass or twopoint)",
            )),
        }
    }
}

impl fmt::Display for IncrementModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IncrementModel::PolyExp(p) => {
                write!(f, "polyexp:gamma={},beta={},shift={}", p.gamma, p.beta, p.shift)
            }
            IncrementModel::PointMass(p) => write!(f, "pointmass:v={}", p.value),
            IncrementModel::TwoPoint(t) => {
                write!(f, "twopoint:u={},pu={},v={}", t.up, t.p_up, t.down)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_each_family() {
        let m: IncrementModel = "polyexp:gamma=1,beta=2,shift=0".parse().unwrap();
        assert_eq!(m, IncrementModel::poly_exp(1.0, 2.0, 0.0).unwrap());
        let m: IncrementModel = "pointmass:v=-1".parse().unwrap();
        assert_eq!(m, IncrementModel::point_mass(-1.0).unwrap());
        let m: IncrementModel = "twopoint:u=1,pu=0.25,v=-1".parse().unwrap();
        assert_eq!(m, IncrementModel::two_point(1.0, 0.25, -1.0).unwrap());
    }

    #[test]
    fn errors_name_the_offending_token() {
        let cases = [
            ("polyexp:gamma=1,beta=2,shfit=0", "shfit"),
            ("polyexp:gamma=abc,beta=2,shift=0", "abc"),
            ("gauss:mu=0", "gauss"),
            ("pointmass", "pointmass"),
        ];
        for (input, token) in cases {
            match input.parse::<IncrementModel>() {
                Err(Error::Spec { token: t, .. }) => assert_eq!(t, token, "{input}"),
                other => panic!("{input}: {other:?}"),
            }
        }
        assert!(matches!(
            "polyexp:gamma=-1,beta=2,shift=0".parse::<IncrementModel>(),
            Err(Error::Param { name: "gamma", .. })
        ));
    }

    proptest! {
        #[test]
        fn display_round_trips(g in 0.01f64..10.0, b in 1.01f64..10.0, d in -5.0f64..5.0) {
            let m = IncrementModel::poly_exp(g, b, d).unwrap();
            let back: IncrementModel = m.to_string().parse().unwrap();
            prop_assert_eq!(m, back);
        }
    }
}
