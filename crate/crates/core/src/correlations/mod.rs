//! Correlation estimators and decay fits, slow observables for the lower bound,
//! the ν-norm and the CLT sampler.

mod clt;
mod estimators;
mod fit;
mod nu;
mod observables;
mod output;
mod slow;

pub use clt::{birkhoff_samples, clt_sample, moments, CltReport};
pub use estimators::{
    grid_correlation, orbit_correlation, orbit_correlations, seeded_start, CorrelationSeries,
    OrbitSampler, MIN_ORBIT_LEN,
};
pub use fit::{
    fit_decay, power_vs_exponential, rate, significant_lags, significant_window,
    theorem_bound_check, BoundCheck, DecayFit, MIN_SIGNIFICANT,
};
pub use nu::{appr_factors, nu_norm, nu_norm_in, ChartBox};
pub use observables::{
    benchmark_suite, bump, by_id, coboundary, cos_x, cos_xy, sin_y, Evaluator, ObservableSpec,
};
pub use output::write_gnuplot_script;
pub use slow::{
    far_observable, lower_bound_record, slow_observable, tent, LowerBoundRecord, SlowObservable,
    DEFAULT_C5, MAX_SLOW_N,
};
