//! Finitely supported measures, the Wasserstein-1 metric, tail classes and
//! checks of the tail probability bounds.

pub mod bounds;
pub mod empirical;

pub use bounds::{
    class_invariance_test, verify_boundary_mass, verify_escape_bound, verify_return_probability,
    BoundCheck, BoundDirection, ClassInvarianceReport, Side,
};
pub use empirical::{
    class_membership, tail_exponent_fit, wasserstein1, ClassMembership, EmpiricalMeasure,
};
