use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument fell outside the domain the operation is defined on.
    #[error("{what} = {value} is outside {domain}")]
    Domain {
        what: &'static str,
        value: f64,
        domain: &'static str,
    },

    #[error("invalid map: {0}")]
    InvalidMap(String),

    #[error("invalid system: {0}")]
    InvalidSystem(String),

    /// A system definition file failed to parse or validate.
    #[error("{path}:{line}: {message}")]
    Load {
        path: String,
        line: usize,
        message: String,
    },

    #[error("symbol {symbol} out of range for a system of {maps} maps")]
    SymbolOutOfRange { symbol: usize, maps: usize },

    /// Exact enumeration would visit more words than the budget allows.
    #[error("enumeration needs {cost} words ({maps}^{depth}), budget is {budget}")]
    BudgetExceeded {
        cost: u128,
        maps: usize,
        depth: usize,
        budget: u64,
    },

    #[error("calibration infeasible: {0}")]
    CalibrationInfeasible(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    /// Not enough information to produce the requested estimate.
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// An internal invariant failed, e.g. a chain state left [0, 1].
    #[error("internal invariant breached: {0}")]
    InvariantBreach(String),
}

pub(crate) fn check_unit(what: &'static str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::Domain {
            what,
            value,
            domain: "[0, 1]",
        })
    }
}

pub(crate) fn check_open_unit(what: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain {
            what,
            value,
            domain: "(0, 1)",
        })
    }
}
