//! The map family, its symmetries and near-fixed-point geometry.

mod dynamics;
mod escape;
mod hamiltonian;
mod passage;
mod point;
mod sector;

pub use dynamics::{
    conjugate_from_standard, conjugate_to_standard, involution_pi, involution_pi1, iterate,
    jacobian, orbit, standard_step, step, step_inverse, step_inverse_local, step_local, Jacobian2,
};
pub use escape::escape_time;
pub use hamiltonian::{
    hamiltonian_drift, level_curve_y, quasi_hamiltonian, quasi_hamiltonian_compensated,
};
pub use passage::{fat_sector_passage, passage_start, PassageRecord, DEFAULT_CAP};
pub use point::{circle_delta, reduce, wrap, TorusPoint};
pub use sector::{classify, in_parabolic, in_rect, in_square, SectorClass};

/// Default half-width of the near-origin square.
pub const DEFAULT_DELTA: f64 = 0.1;
