//! Spectral tools for the focusing fractional NLS `i u_t - (-Δ)^s u = -|u|^alpha u`
//! on a periodic box, with virial diagnostics and blow-up criteria.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod criteria;
pub mod cutoffs;
pub mod dynamics;
pub mod error;
pub mod field;
pub mod grid;
pub mod ground_state;
pub mod invariants;
mod jet;
pub mod params;
pub mod quadrature;
pub mod snapshot;
pub mod virial;

pub use criteria::{classify, delta_bound, CriteriaVerdict, Verdict};
pub use cutoffs::{make_phi, make_psi, verify_weight_properties, Weight, WeightKind};
pub use dynamics::{
    evolve, exterior_mass, strang_step, BlowupReport, EvolveOptions, Monitors, StoppingReason,
    Trajectory, TrajectoryRecord,
};
pub use error::{FnlsError, Result};
pub use field::{rescale, Field, NormKind, Rescaled, Spectrum, Symbol};
pub use grid::Grid;
pub use ground_state::{
    energy_critical_thresholds, intercritical_thresholds, make_w, solve_q, GroundStateSolution,
    ThresholdData,
};
pub use invariants::{conserved_report, ConservedReport};
pub use params::{Criticality, PhysicsParams};
pub use quadrature::MQuadrature;
pub use virial::{virial_actions, VirialReport};
