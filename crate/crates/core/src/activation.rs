use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest `f64` strictly below one; sigmoid outputs are clamped into
/// `[f64::MIN_POSITIVE, SIGMOID_MAX]` so they never reach 0 or 1 exactly.
const SIGMOID_MAX: f64 = 1.0 - f64::EPSILON / 2.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Activation {
    Relu,
    LeakyRelu(f64),
    Sigmoid,
    Tanh,
}

impl Activation {
    pub fn leaky_relu(alpha: f64) -> Result<Self> {
        if alpha > 0.0 && alpha < 1.0 {
            Ok(Activation::LeakyRelu(alpha))
        } else {
            Err(Error::Config(format!("leaky_relu slope must lie in (0,1), got {alpha}")))
        }
    }

    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::LeakyRelu(a) => {
                if x > 0.0 {
                    x
                } else {
                    a * x
                }
            }
            Activation::Sigmoid => sigmoid(x),
            Activation::Tanh => x.tanh(),
        }
    }

    /// Derivative at input `x` given the already computed output `y`.
    pub fn derivative(self, x: f64, y: f64) -> f64 {
        match self {
            Activation::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::LeakyRelu(a) => {
                if x > 0.0 {
                    1.0
                } else {
                    a
                }
            }
            Activation::Sigmoid => y * (1.0 - y),
            Activation::Tanh => 1.0 - y * y,
        }
    }
}

pub fn sigmoid(x: f64) -> f64 {
    let s = if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    };
    s.clamp(f64::MIN_POSITIVE, SIGMOID_MAX)
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Activation::Relu => write!(f, "relu"),
            Activation::LeakyRelu(a) => write!(f, "leaky_relu({a})"),
            Activation::Sigmoid => write!(f, "sigmoid"),
            Activation::Tanh => write!(f, "tanh"),
        }
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "relu" => return Ok(Activation::Relu),
            "sigmoid" => return Ok(Activation::Sigmoid),
            "tanh" => return Ok(Activation::Tanh),
            _ => {}
        }
        if let Some(arg) = s.strip_prefix("leaky_relu(").and_then(|r| r.strip_suffix(')')) {
            let alpha: f64 = arg
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("bad leaky_relu slope {arg:?}")))?;
            return Activation::leaky_relu(alpha);
        }
        Err(Error::Config(format!("unknown activation {s:?}")))
    }
}

impl TryFrom<String> for Activation {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Activation> for String {
    fn from(a: Activation) -> String {
        a.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn definitions() {
        let relu: Vec<f64> = [-1.0, 0.0, 2.0].iter().map(|&x| Activation::Relu.apply(x)).collect();
        assert_eq!(relu, [0.0, 0.0, 2.0]);
        assert_eq!(Activation::Sigmoid.apply(0.0), 0.5);
        assert_eq!(Activation::leaky_relu(0.2).unwrap().apply(-5.0), -1.0);
    }

    #[test]
    fn sigmoid_stays_open_interval() {
        for x in [-1e4, -800.0, -40.0, 40.0, 800.0, 1e4] {
            let s = sigmoid(x);
            assert!(s > 0.0 && s < 1.0, "sigmoid({x}) = {s}");
        }
    }

    #[test]
    fn parse_round_trip_and_errors() {
        for a in [
            Activation::Relu,
            Activation::Sigmoid,
            Activation::Tanh,
            Activation::LeakyRelu(0.2),
        ] {
            assert_eq!(a.to_string().parse::<Activation>().unwrap(), a);
        }
        assert!(matches!("swish".parse::<Activation>(), Err(Error::Config(_))));
        assert!(matches!("leaky_relu(1.5)".parse::<Activation>(), Err(Error::Config(_))));
        assert!(matches!("leaky_relu(0)".parse::<Activation>(), Err(Error::Config(_))));
    }
}
