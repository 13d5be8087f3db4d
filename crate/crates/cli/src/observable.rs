//! Named test functions `φ: [0, 1] → ℝ` selectable from the command line.

use std::fmt;
use std::str::FromStr;

use ifs_ergodic::chain::burn_in_sample;
use ifs_ergodic::IfsSystem;
use serde::Serialize;

use crate::error::{CliError, CliResult};

/// A test function as named on the command line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ObservableSpec {
    Identity,
    /// `x − ½`.
    Centered,
    Zero,
    Const(f64),
    /// `x(1 − x)`.
    Parabola,
    /// `min(x, 1 − x)`.
    Tent,
    /// `parabola − c·tent` with `c` fitted so the burn-in mean is 0.
    Balanced,
}

impl FromStr for ObservableSpec {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        Ok(match s {
            "identity" => Self::Identity,
            "centered" => Self::Centered,
            "zero" => Self::Zero,
            "parabola" => Self::Parabola,
            "tent" => Self::Tent,
            "balanced" => Self::Balanced,
            other => match other.strip_prefix("const:").map(str::parse::<f64>) {
                Some(Ok(c)) if c.is_finite() => Self::Const(c),
                _ => {
                    return Err(CliError::Usage(format!(
                        "unknown test function {other:?}; expected identity, centered, zero, \
                         const:<c>, parabola, tent or balanced"
                    )))
                }
            },
        })
    }
}

impl fmt::Display for ObservableSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Identity => f.write_str("identity"),
            Self::Centered => f.write_str("centered"),
            Self::Zero => f.write_str("zero"),
            Self::Const(c) => write!(f, "const:{c}"),
            Self::Parabola => f.write_str("parabola"),
            Self::Tent => f.write_str("tent"),
            Self::Balanced => f.write_str("balanced"),
        }
    }
}

/// A test function ready for evaluation:
/// `constant + linear·x + parabola·x(1 − x) + tent·min(x, 1 − x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Observable {
    pub name: &'static str,
    pub constant: f64,
    pub linear: f64,
    pub parabola: f64,
    pub tent: f64,
}

impl Observable {
    fn new(name: &'static str, constant: f64, linear: f64, parabola: f64, tent: f64) -> Self {
        Self {
            name,
            constant,
            linear,
            parabola,
            tent,
        }
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        self.constant + self.linear * x + self.parabola * x * (1.0 - x) + self.tent * x.min(1.0 - x)
    }
}

impl ObservableSpec {
    /// Fixes the function. `balanced` draws `replicas` burn-in states of
    /// `n_burn` steps to fit its tent coefficient.
    pub fn resolve(
        self,
        system: &IfsSystem,
        n_burn: usize,
        replicas: usize,
        seed: u64,
    ) -> CliResult<Observable> {
        Ok(match self {
            Self::Identity => Observable::new("identity", 0.0, 1.0, 0.0, 0.0),
            Self::Centered => Observable::new("centered", -0.5, 1.0, 0.0, 0.0),
            Self::Zero => Observable::new("zero", 0.0, 0.0, 0.0, 0.0),
            Self::Const(c) => Observable::new("const", c, 0.0, 0.0, 0.0),
            Self::Parabola => Observable::new("parabola", 0.0, 0.0, 1.0, 0.0),
            Self::Tent => Observable::new("tent", 0.0, 0.0, 0.0, 1.0),
            Self::Balanced => {
                let mu = burn_in_sample(system, n_burn, replicas, seed)?;
                let tent = mu.integrate(|x| x.min(1.0 - x));
                if tent <= 0.0 {
                    return Err(CliError::Usage(
                        "burn-in sample sits on the endpoints; cannot balance".into(),
                    ));
                }
                let c = mu.integrate(|x| x * (1.0 - x)) / tent;
                Observable::new("balanced", 0.0, 0.0, 1.0, -c)
            }
        })
    }
}
