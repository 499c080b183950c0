//! Non-classicality certificates for single-mode light.
//!
//! The crate computes the variance-minus-mean measure
//! `K = ⟨Δn²⟩ − ⟨n⟩ = ⟨a*²a²⟩ − ⟨a*a⟩²` and the sub-Poisson predicate
//! ([`stats`]), tests whether the photon-number moments could come from a
//! classical random amplitude ([`witness`]), detects antibunching
//! `P(τ) > P(0)` in emitter models and checks the Schwarz bound on classical
//! intensity processes ([`antibunching`]), and studies K as a function of
//! the photon-number distribution ([`landscape`]).
//!
//! The guide in `book/` walks through each of these with runnable examples.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod antibunching;
pub mod error;
pub mod fock;
pub mod landscape;
mod nnls;
pub mod stats;
pub mod witness;

pub use error::{Error, Result};
pub use fock::{
    annihilation, apply, coherent_state, creation, expectation, fock_state, make_space,
    number_operator, superposition, thermal_state, DensityOperator, FockSpace, Ket, Operator,
    PhotonState, QuantumState, StateVector, C64,
};
pub use stats::{
    is_sub_poisson, k_from_distribution, k_measure, mandel_q, photon_distribution, stats_report,
    PhotonNumberDistribution, PhotonStatistics, StatsReport,
};
pub use witness::{
    cb_check, factorial_moments, fit_classical_measure, hankel_witness, GridSpec,
    MeasureFitResult, MomentSequence, WitnessReport,
};
pub use antibunching::{
    detect_antibunching, g2_correlation, lindblad_propagate, schwarz_violation_test,
    simulate_classical_intensity, steady_state, AntibunchingReport, ClassicalProcessModel,
    CorrelationSeries, EmitterKind, EmitterModel,
};
pub use landscape::{
    k_of, min_k_grid, min_k_vertex, projected_gradient_min, scan_k, LandscapeResult, StepRule,
    SupportSet,
};

// The guide's code blocks run as doctests, one module per chapter.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/fock-space.md")]
    mod fock_space {}
    #[doc = include_str!("../../../book/src/k-measure.md")]
    mod k_measure {}
    #[doc = include_str!("../../../book/src/classicality.md")]
    mod classicality {}
    #[doc = include_str!("../../../book/src/antibunching.md")]
    mod antibunching {}
    #[doc = include_str!("../../../book/src/k-landscape.md")]
    mod k_landscape {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
    #[doc = include_str!("../../../README.md")]
    mod readme {}
}
