//! Iterated function systems of increasing piecewise-linear homeomorphisms.

pub mod admissibility;
pub mod calibration;
pub mod enumerate;
pub mod map;
pub mod system;

pub use admissibility::{check_admissible, AdmissibilityReport, DEFAULT_GRID_POINTS};
pub use calibration::{
    calibrate, regime, regime_from, sweep_alpha, AlphaSweepRow, BoundRegime, CalibrationConstants,
};
pub use enumerate::{dual_apply_exact, dual_ladder_exact, walk_words};
pub use map::{IntervalMap, PiecewiseLinearMap};
pub use system::IfsSystem;

use crate::measure::EmpiricalMeasure;

/// Exact pushforward `Pμ = Σ p_i μ∘f_i⁻¹` of a finitely supported measure.
///
/// Each atom splits into one atom per symbol with positive probability.
pub fn markov_step_atoms(system: &IfsSystem, mu: &EmpiricalMeasure) -> EmpiricalMeasure {
    let mut atoms = Vec::with_capacity(mu.len() * system.len());
    for (symbol, &p) in system.probs().iter().enumerate() {
        if p > 0.0 {
            atoms.extend(mu.atoms().map(|(x, w)| (system.step(symbol, x), w * p)));
        }
    }
    EmpiricalMeasure::from_atoms_unchecked(atoms)
}

/// `P^n μ` by repeated exact pushforward; atom count grows as `N^n`.
pub fn markov_iterate_atoms(
    system: &IfsSystem,
    mu: &EmpiricalMeasure,
    n: usize,
) -> EmpiricalMeasure {
    let mut current = mu.clone();
    for _ in 0..n {
        current = markov_step_atoms(system, &current);
    }
    current
}
