//! How an expectation over random words gets evaluated: by walking every
//! word (exact) or by sampling (Monte Carlo).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Requested evaluation mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Exact,
    Mc,
    /// Exact when the word count fits the budget, Monte Carlo otherwise.
    Auto,
}

/// The mode an estimate was actually produced with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimateMode {
    Exact,
    Mc,
}

impl fmt::Display for EstimateMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EstimateMode::Exact => "exact",
            EstimateMode::Mc => "mc",
        })
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Exact => "exact",
            Mode::Mc => "mc",
            Mode::Auto => "auto",
        })
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Mode::Exact),
            "mc" => Ok(Mode::Mc),
            "auto" => Ok(Mode::Auto),
            other => Err(Error::Precondition(format!(
                "unknown mode {other:?}, expected exact, mc or auto"
            ))),
        }
    }
}

/// Maximum number of words an exact enumeration may visit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Budget(pub u64);

impl Default for Budget {
    fn default() -> Self {
        Budget(1 << 20)
    }
}

impl Budget {
    /// `maps^depth`, saturating.
    pub fn cost(maps: usize, depth: usize) -> u128 {
        let mut cost: u128 = 1;
        for _ in 0..depth {
            cost = cost.saturating_mul(maps as u128);
        }
        cost
    }

    pub fn allows(self, maps: usize, depth: usize) -> bool {
        Self::cost(maps, depth) <= self.0 as u128
    }

    pub fn check(self, maps: usize, depth: usize) -> Result<()> {
        let cost = Self::cost(maps, depth);
        if cost <= self.0 as u128 {
            Ok(())
        } else {
            Err(Error::BudgetExceeded {
                cost,
                maps,
                depth,
                budget: self.0,
            })
        }
    }
}

/// Mode, budget and sampling effort for operations that can run either way.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalPlan {
    pub mode: Mode,
    pub budget: Budget,
    /// Monte Carlo replica count.
    pub replicas: usize,
    pub seed: u64,
}

impl EvalPlan {
    pub fn exact() -> Self {
        Self {
            mode: Mode::Exact,
            budget: Budget::default(),
            replicas: 0,
            seed: 0,
        }
    }

    pub fn mc(replicas: usize, seed: u64) -> Self {
        Self {
            mode: Mode::Mc,
            budget: Budget::default(),
            replicas,
            seed,
        }
    }

    pub fn auto(replicas: usize, seed: u64) -> Self {
        Self {
            mode: Mode::Auto,
            ..Self::mc(replicas, seed)
        }
    }

    pub fn with_budget(mut self, budget: Budget) -> Self {
        self.budget = budget;
        self
    }

    /// Picks exact or Monte Carlo for a walk of `depth` steps over `maps` symbols.
    pub fn resolve(&self, maps: usize, depth: usize) -> Result<EstimateMode> {
        let resolved = match self.mode {
            Mode::Exact => {
                self.budget.check(maps, depth)?;
                EstimateMode::Exact
            }
            Mode::Mc => EstimateMode::Mc,
            Mode::Auto if self.budget.allows(maps, depth) => EstimateMode::Exact,
            Mode::Auto => EstimateMode::Mc,
        };
        if resolved == EstimateMode::Mc && self.replicas < 2 {
            return Err(Error::Precondition(format!(
                "Monte Carlo needs at least 2 replicas, plan has {}",
                self.replicas
            )));
        }
        Ok(resolved)
    }
}

/// A scalar estimate with its standard error (zero when exact).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
    pub mode: EstimateMode,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Self {
            value,
            stderr: 0.0,
            mode: EstimateMode::Exact,
        }
    }

    /// Sample mean and standard error of the mean, summed in slice order.
    pub fn from_samples(samples: &[f64]) -> Self {
        let (mean, var) = crate::stats::mean_var(samples);
        Self {
            value: mean,
            stderr: (var / samples.len() as f64).sqrt(),
            mode: EstimateMode::Mc,
        }
    }
}
