//! Simulation and inference for a discrete-time dynamic Erdős–Rényi graph.
//!
//! Every potential edge alternates between *on* and *off* according to an
//! independent alternating renewal process with on-time law `X` and off-time
//! law `Y`. Only aggregate counts are observed (the number of edges, or the
//! number of triangles or wedges), and the crate recovers the parameters of
//! `X` and `Y` from those counts by the method of moments.
//!
//! The crate is `no_std` + `alloc`. The `std` feature (on by default) only
//! switches elementary float functions to the platform implementations and
//! enables `std::error::Error` for [`Error`].
//!
//! Modules:
//!
//! - [`dist`]: the duration laws, residual laws and inverse-transform samplers.
//! - [`special`]: Hurwitz-type and Weibull-type series and their inverses.
//! - [`sim`]: the stationary edge simulator and subgraph counting.
//! - [`renewal`]: joint MGF, joint on/off laws, autocovariance recursions and
//!   the saddlepoint approximation.
//! - [`moments`]: empirical moments and the moment estimators.
//! - [`asymp`]: asymptotic covariance of the moment statistics and estimators.

#![cfg_attr(not(feature = "std"), no_std)]
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;

pub mod asymp;
pub mod dist;
mod error;
mod math;
pub mod moments;
mod partition;
pub mod renewal;
pub mod sim;
pub mod special;

pub use error::{Error, Result};

pub use asymp::{
    delta_method_cov, finiteness_check, general_moment_cov, geometric_moment_cov, Finiteness,
    GeneralCov, MomentCov, ParamCov, SeriesStatus, Verdict,
};
pub use dist::{LawSpec, OnOffLaw, ResidualLaw};
pub use moments::{
    empirical_moments, estimate, estimate_from_subgraph, estimate_gg, estimate_pareto_geo,
    estimate_parpar, estimate_weibull_geo, theoretical_moment, triangle_moments, wedge_moments,
    EstimateReport, Family, MomentAccumulator, MomentSet,
};
pub use renewal::{
    joint_distribution, joint_mgf, legendre_transform, saddlepoint_logprob, AutocovTable, JointLaw,
    Legendre, MgfEngine, Saddlepoint,
};
pub use sim::{
    simulate_edge_trace, simulate_graph_trace, stationary_init, CountTrace, EdgeEnsemble,
    EdgeState, GraphSimulator, ModelSpec, Observable,
};
