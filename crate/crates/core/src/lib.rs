//! Numerical laboratory for an intermittent area-preserving map of the two-torus
//! with a neutral fixed point at the origin.

pub mod correlations;
pub mod directions;
pub mod error;
pub mod manifolds;
pub mod map_core;
pub mod numeric;
pub mod parallel;
pub mod perturbation;
pub mod profile;

pub use error::{Error, Result};
pub use map_core::TorusPoint;
pub use profile::ShearProfile;
