//! Scalar activations applied componentwise to reservoir pre-activations.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::ensembles::parse_params;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Activation {
    /// Identity on `(-delta, delta)`, constant `±1` beyond `±d`, and a cubic
    /// Hermite bridge in between. Build it with [`Activation::piecewise`].
    PiecewiseSigmoid {
        delta: f64,
        d: f64,
    },
    Tanh,
    Relu,
    /// `sign(x) * ln(1 + |x|)`.
    LogSig,
    Identity,
}

impl Activation {
    /// Piecewise sigmoid with linear radius `delta` and saturation point `d`.
    ///
    /// The Hermite bridge from `(delta, delta)` with slope 1 to `(d, 1)` with
    /// slope 0 is nondecreasing exactly when `d - delta <= 3 (1 - delta)`, so
    /// the admissible region is `0 < delta < 1` and `delta < d <= 3 - 2 delta`.
    pub fn piecewise(delta: f64, d: f64) -> Result<Self> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "piecewise sigmoid needs 0 < delta < 1, got delta = {delta}"
            )));
        }
        if !(d > delta) {
            return Err(Error::InvalidArgument(format!(
                "piecewise sigmoid needs delta < d, got delta = {delta}, d = {d}"
            )));
        }
        if d - delta > 3.0 * (1.0 - delta) {
            return Err(Error::InvalidArgument(format!(
                "bridge would not be monotone: need d <= 3 - 2 delta = {}, got d = {d}",
                3.0 - 2.0 * delta
            )));
        }
        Ok(Activation::PiecewiseSigmoid { delta, d })
    }

    /// Evaluate without the NaN check. NaN propagates.
    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            Activation::PiecewiseSigmoid { delta, d } => piecewise_eval(delta, d, x),
            Activation::Tanh => x.tanh(),
            Activation::Relu => x.max(0.0),
            Activation::LogSig => x.signum() * x.abs().ln_1p(),
            Activation::Identity => x,
        }
    }

    pub fn apply(&self, x: f64) -> Result<f64> {
        if x.is_nan() {
            return Err(Error::NanInput);
        }
        Ok(self.eval(x))
    }

    pub fn apply_vector(&self, v: &[f64]) -> Result<Vec<f64>> {
        v.iter().map(|&x| self.apply(x)).collect()
    }

    pub fn is_saturating(&self) -> bool {
        matches!(self, Activation::PiecewiseSigmoid { .. } | Activation::Tanh)
    }

    /// Radius of the interval on which the activation is exactly the
    /// identity: `Some(delta)` for the piecewise sigmoid, `Some(INFINITY)`
    /// for the identity, `None` otherwise.
    pub fn linear_radius(&self) -> Option<f64> {
        match *self {
            Activation::PiecewiseSigmoid { delta, .. } => Some(delta),
            Activation::Identity => Some(f64::INFINITY),
            _ => None,
        }
    }

    /// Whether the activation is bounded by 1 in absolute value.
    pub fn is_bounded(&self) -> bool {
        self.is_saturating()
    }

    /// `(delta, d)` of the piecewise sigmoid.
    pub fn piecewise_params(&self) -> Option<(f64, f64)> {
        match *self {
            Activation::PiecewiseSigmoid { delta, d } => Some((delta, d)),
            _ => None,
        }
    }

    /// Largest `r` such that `|phi(x) - x| <= rel_tol * |x|` on `(-r, r)`.
    /// Closed forms for tanh (`x^3/3` leading term) and LogSig (`x/2`);
    /// ReLU is never close to the identity on a symmetric interval.
    pub fn approximate_linear_radius(&self, rel_tol: f64) -> Option<f64> {
        match *self {
            Activation::PiecewiseSigmoid { delta, .. } => Some(delta),
            Activation::Identity => Some(f64::INFINITY),
            Activation::Tanh => Some((3.0 * rel_tol).sqrt()),
            Activation::LogSig => Some(2.0 * rel_tol),
            Activation::Relu => None,
        }
    }
}

#[inline]
fn piecewise_eval(delta: f64, d: f64, x: f64) -> f64 {
    let a = x.abs();
    if a < delta {
        return x;
    }
    if a >= d {
        return x.signum();
    }
    // Cubic Hermite on [delta, d]: p(delta) = delta, p'(delta) = 1,
    // p(d) = 1, p'(d) = 0.
    let h = d - delta;
    let t = (a - delta) / h;
    let t2 = t * t;
    let t3 = t2 * t;
    let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    let h10 = t3 - 2.0 * t2 + t;
    let h01 = -2.0 * t3 + 3.0 * t2;
    let value = h00 * delta + h10 * h + h01;
    value.copysign(x)
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Activation::PiecewiseSigmoid { delta, d } => write!(f, "pws:delta={delta},d={d}"),
            Activation::Tanh => f.write_str("tanh"),
            Activation::Relu => f.write_str("relu"),
            Activation::LogSig => f.write_str("logsig"),
            Activation::Identity => f.write_str("identity"),
        }
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (head, params) = match s.split_once(':') {
            Some((h, p)) => (h, Some(p)),
            None => (s, None),
        };
        match (head.to_ascii_lowercase().as_str(), params) {
            ("tanh", None) => Ok(Activation::Tanh),
            ("relu", None) => Ok(Activation::Relu),
            ("logsig", None) => Ok(Activation::LogSig),
            ("identity" | "linear", None) => Ok(Activation::Identity),
            ("pws", Some(p)) => {
                let mut delta = None;
                let mut d = None;
                for (key, value) in parse_params(p)? {
                    match key.to_ascii_lowercase().as_str() {
                        "delta" => delta = Some(value),
                        "d" => d = Some(value),
                        other => {
                            return Err(Error::InvalidArgument(format!(
                                "unknown piecewise sigmoid parameter `{other}`"
                            )))
                        }
                    }
                }
                match (delta, d) {
                    (Some(delta), Some(d)) => Activation::piecewise(delta, d),
                    _ => Err(Error::InvalidArgument(
                        "pws needs both delta and d, e.g. pws:delta=0.5,d=2".into(),
                    )),
                }
            }
            _ => Err(Error::InvalidArgument(format!("unknown activation `{s}`"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pws() -> Activation {
        Activation::piecewise(0.5, 2.0).unwrap()
    }

    #[test]
    fn piecewise_pieces() {
        let a = pws();
        assert_eq!(a.apply(0.3).unwrap(), 0.3);
        assert_eq!(a.apply(5.0).unwrap(), 1.0);
        assert_eq!(a.apply(-5.0).unwrap(), -1.0);
        assert_eq!(a.apply(0.5).unwrap(), 0.5);
        assert_eq!(a.apply(2.0).unwrap(), 1.0);
    }

    #[test]
    fn logsig_values() {
        let e1 = std::f64::consts::E - 1.0;
        let a = Activation::LogSig;
        assert_eq!(a.apply(0.0).unwrap(), 0.0);
        assert!((a.apply(e1).unwrap() - 1.0).abs() < 1e-15);
        assert!((a.apply(-e1).unwrap() + 1.0).abs() < 1e-15);
    }

    #[test]
    fn nan_is_rejected() {
        for a in [
            pws(),
            Activation::Tanh,
            Activation::Relu,
            Activation::LogSig,
            Activation::Identity,
        ] {
            assert!(matches!(a.apply(f64::NAN), Err(Error::NanInput)));
        }
    }

    #[test]
    fn vector_application() {
        for a in [
            pws(),
            Activation::Tanh,
            Activation::LogSig,
            Activation::Identity,
        ] {
            assert_eq!(a.apply_vector(&[0.0; 4]).unwrap(), vec![0.0; 4]);
        }
        assert_eq!(
            Activation::Relu.apply_vector(&[-1.0, 2.0]).unwrap(),
            vec![0.0, 2.0]
        );
        assert_eq!(
            pws().apply_vector(&[0.1, 10.0, -10.0]).unwrap(),
            vec![0.1, 1.0, -1.0]
        );
    }

    #[test]
    fn regime_predicates() {
        assert!(pws().is_saturating());
        assert_eq!(pws().linear_radius(), Some(0.5));
        assert!(Activation::Tanh.is_saturating());
        assert_eq!(Activation::Tanh.linear_radius(), None);
        assert!(!Activation::Relu.is_saturating());
        assert_eq!(Activation::Relu.linear_radius(), None);
        assert!(!Activation::LogSig.is_saturating());
        assert_eq!(Activation::LogSig.linear_radius(), None);
        assert!(!Activation::Identity.is_saturating());
        assert_eq!(Activation::Identity.linear_radius(), Some(f64::INFINITY));
    }

    #[test]
    fn constructor_rejects_non_monotone_bridges() {
        assert!(Activation::piecewise(0.5, 0.4).is_err());
        assert!(Activation::piecewise(0.0, 2.0).is_err());
        assert!(Activation::piecewise(1.0, 2.0).is_err());
        assert!(Activation::piecewise(0.5, 2.1).is_err());
        assert!(Activation::piecewise(0.1, 2.8).is_ok());
    }

    #[test]
    fn approximate_radius_for_tanh() {
        let r = Activation::Tanh.approximate_linear_radius(1e-4).unwrap();
        let x = 0.9 * r;
        assert!((x.tanh() - x).abs() / x <= 1e-4);
    }

    #[test]
    fn parsing() {
        assert_eq!("tanh".parse::<Activation>().unwrap(), Activation::Tanh);
        assert_eq!("relu".parse::<Activation>().unwrap(), Activation::Relu);
        assert_eq!("logsig".parse::<Activation>().unwrap(), Activation::LogSig);
        assert_eq!(
            "identity".parse::<Activation>().unwrap(),
            Activation::Identity
        );
        assert_eq!("pws:delta=0.5,d=2".parse::<Activation>().unwrap(), pws());
        assert!("pws:delta=0.5".parse::<Activation>().is_err());
        assert!("softplus".parse::<Activation>().is_err());
        assert_eq!(pws().to_string().parse::<Activation>().unwrap(), pws());
    }
}
