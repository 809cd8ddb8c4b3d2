//! Distribution-free chain ladder reserving.
//!
//! Three routes share one data model: the classical chain ladder with a
//! residual bootstrap, a likelihood-free Bayesian route (MCMC-ABC with a
//! rejection sampler as cross-check) and closed-form credibility MSEP.

// `!(x > 0.0)` is used on purpose so that NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod abc;
pub mod bootstrap;
pub mod chainladder;
pub mod datasets;
pub mod diagnostics;
pub mod error;
pub mod inference;
pub mod mcmc;
pub mod stats;
pub mod study;
pub mod synthetic;
pub mod triangle;

pub use abc::{DistanceConfig, Metric, MomentCovariance, SummaryStats, ToleranceSchedule};
pub use bootstrap::{BootstrapDraw, ResampleMode, ResidualSet};
pub use chainladder::{ClPrediction, ClassicalFit, DfclParams, YearTerms};
pub use error::{Error, Result};
pub use triangle::{ClaimsTriangle, Layout};
pub use mcmc::{PosteriorChain, PriorSpec, ProposalConfig, SamplerSettings};
pub use inference::{MsepReport, MsepRow, PointEstimates, PredictiveSample, ResidualSource, Route, VarReport};
pub use synthetic::{GeneratorSpec, StandardResidual};
