//! Simulation and analysis toolkit for a three-variable ODE model of
//! heterogeneous protein aggregates: p62 oligomers (count `r`) glued by
//! ubiquitin cross-linkers bound by one hand (`p`) or both hands (`q`).
//!
//! The crate provides
//! - the model vector field, admissibility constraints, the closed-form
//!   nontrivial equilibrium, and regime classification ([`model`]),
//! - an adaptive Dormand–Prince 5(4) integrator with dense output, event
//!   location, and auxiliary clock columns ([`integrator`]),
//! - the desingularizing blow-up chart and the compactified slow-fast
//!   coordinates with their derived constants ([`transforms`]),
//! - regime experiments, growth-exponent fits, singular-perturbation error
//!   scaling, and bifurcation sweeps ([`analysis`]).
//!
//! Everything is a pure function of its inputs; integration runs own their
//! workspaces, so independent runs can execute concurrently. Batch drivers
//! (`analysis::bifurcation_sweep`, `analysis::verify_theorem2`, the
//! transform-agreement batch) fan out with rayon when the default `parallel`
//! feature is enabled and fall back to sequential loops otherwise. The
//! `AGGREKIN_THREADS` environment variable caps the worker count.

// `!(x > 0.0)` is used instead of `x <= 0.0` throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod exec;
pub mod integrator;
pub mod io;
pub mod model;
pub mod rng;
pub mod systems;
pub mod transforms;

mod roots;

pub use analysis::{
    bifurcation_sweep, fit_growth, run_regime_experiment, slow_growth_constant,
    transform_agreement, verify_corollary1, verify_theorem2, AnalysisError, ExperimentOptions,
    ExperimentReport, GrowthFit, SweepConfig, SweepFixed, SweepResult, Verdict,
};
pub use integrator::{
    integrate, integrate_augmented, Event, IntegrateError, IntegratorConfig, Status, Trajectory,
};
pub use model::{
    alpha, alpha_bar, classify, equilibrium, validate_params, vector_field, Equilibrium,
    ModelError, ModelParams, RawParams, Regime, RegimeTag, State,
};
pub use systems::SystemKind;
pub use transforms::{
    find_p1_star, find_slow_constants, from_blowup, from_compact, layer_u_field, layer_v_field,
    slow_w, to_blowup, to_compact, u_of_v, v_star, BlowupState, CompactState, SlowConstants,
    TransformError,
};
