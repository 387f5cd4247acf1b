//! The mollifier `Q_ε`, Ulam discretizations of the transfer operator, the randomly
//! perturbed operator `L_ε = Q_ε Lⁿ`, its Doeblin constant and L¹ contraction.

mod grid;
mod mollifier;
mod ulam;

pub use grid::{cell_center, cell_of, DensityGrid};
pub use mollifier::{mollify, smoothing_error, DiscreteKernel, MollifierSpec};
pub use ulam::{
    doeblin_sigma, l1_decay_curve, perturbed_operator, steps_for, ulam_transfer, Csr, UlamOperator,
};

/// Default grid size.
pub const DEFAULT_GRID: usize = 128;
/// Default smoothing radius.
pub const DEFAULT_EPS: f64 = 0.05;
/// Default sample points per cell.
pub const DEFAULT_SAMPLES: usize = 400;
/// Default constant in `n_ε = C₃ ε^{-1/2}`.
pub const DEFAULT_C3: f64 = 10.0;
