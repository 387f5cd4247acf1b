//! Local stable and unstable manifolds of the fixed point, their restricted maps,
//! and the local-product structure between leaves.

mod graph;
mod leaves;
mod variational;

pub use graph::{
    manifold_slope, manifold_slope_seeded, stable_graph, stable_sample, unstable_graph,
    ManifoldGraph, ManifoldKind, ManifoldSlope, DEFAULT_A_MAX, MINIMIZER_TOL,
};
pub use leaves::{
    integrate_leaf, local_product_bracket, stable_leaf_y, unstable_holonomy, unstable_leaf_y,
    HolonomyResult, StableLeaf,
};
pub use variational::{
    default_length, generating_l, lagrangian_gradient, minimize_stable_sequence, SequenceWindow,
    TailRule,
};
