//! Random iterated function systems of increasing interval homeomorphisms.
//!
//! A system is a finite family of increasing piecewise-linear homeomorphisms
//! `f_1, …, f_N` of `[0, 1]` with probabilities `p_1, …, p_N`. It drives the
//! Markov chain `X_{k+1} = f_{i_{k+1}}(X_k)` with i.i.d. symbols. The crate
//! provides
//!
//! * exact oracles that walk every word of a given length ([`ifs`]);
//! * reproducible Monte Carlo with one SplitMix64 stream per replica
//!   ([`rng`], [`chain`]);
//! * empirical measures, the Wasserstein-1 metric, tail classes and tail
//!   bound checks ([`measure`]);
//! * stability, synchronization and dual-operator diagnostics ([`ergodic`]);
//! * central limit diagnostics: normalized sums, variance, KS tests,
//!   characteristic functions, norm growth ([`clt`], [`ks`]).
//!
//! Results never depend on the number of threads: parallel work is collected
//! in replica or symbol order before any reduction.
//!
//! ```
//! use ifs_ergodic::ifs::{dual_apply_exact, IfsSystem};
//! use ifs_ergodic::plan::Budget;
//!
//! let am2 = IfsSystem::am2();
//! // The fixture is symmetric under x ↦ 1 − x, so U^n id(½) = ½.
//! let v = dual_apply_exact(&am2, |x| x, 10, 0.5, Budget::default())?;
//! assert_eq!(v, 0.5);
//! # Ok::<(), ifs_ergodic::Error>(())
//! ```

pub mod chain;
pub mod clt;
pub mod ergodic;
pub mod error;
pub mod ifs;
pub mod ks;
pub mod measure;
pub mod plan;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
pub use ifs::{IfsSystem, PiecewiseLinearMap};
pub use measure::EmpiricalMeasure;
pub use plan::{Budget, Estimate, EstimateMode, EvalPlan, Mode};
pub use rng::StreamSpec;

/// Library version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/systems.md")]
    mod systems {}
    #[doc = include_str!("../../../book/src/simulation.md")]
    mod simulation {}
    #[doc = include_str!("../../../book/src/evaluation.md")]
    mod evaluation {}
    #[doc = include_str!("../../../book/src/tail-bounds.md")]
    mod tail_bounds {}
    #[doc = include_str!("../../../book/src/ergodicity.md")]
    mod ergodicity {}
    #[doc = include_str!("../../../book/src/central-limit.md")]
    mod central_limit {}
    #[doc = include_str!("../../../book/src/command-line.md")]
    mod command_line {}
}
