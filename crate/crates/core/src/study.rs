//! Posterior sensitivity to the tolerance floor.

use rayon::prelude::*;
use serde::Serialize;

use crate::abc::{DistanceConfig, ToleranceSchedule};
use crate::error::{Error, Result};
use crate::mcmc::{mcmc_abc_run, PriorSpec, ProposalConfig, SamplerSettings};
use crate::stats::{mean, sample_variance};
use crate::triangle::ClaimsTriangle;

/// Post-burn-in summary of one coordinate at one tolerance floor. A chain
/// that aborted keeps its error and has no moments.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ToleranceSummary {
    pub eps: f64,
    pub coordinate: usize,
    pub mean: Option<f64>,
    pub sd: Option<f64>,
    pub acceptance: Option<f64>,
    pub error: Option<String>,
}

/// One chain per floor in `floors`, all sharing `seed` and the schedule's
/// anchor and slope. Summarises coordinate `k` (factors first).
#[allow(clippy::too_many_arguments)]
pub fn tolerance_study(
    t: &ClaimsTriangle,
    priors: &PriorSpec,
    proposal: &ProposalConfig,
    dist: &DistanceConfig,
    anchor: f64,
    slope: f64,
    settings: &SamplerSettings,
    floors: &[f64],
    k: usize,
    seed: u64,
) -> Result<Vec<ToleranceSummary>> {
    if k >= 2 * t.last() {
        return Err(Error::InvalidParameter(format!("coordinate {k} out of range")));
    }
    floors
        .par_iter()
        .map(|&eps| {
            let sched = ToleranceSchedule::new(anchor.max(eps), slope, eps)?;
            Ok(match mcmc_abc_run(t, priors, proposal, dist, &sched, settings, seed) {
                Ok(chain) => {
                    let x = chain.trace(k);
                    ToleranceSummary {
                        eps,
                        coordinate: k,
                        mean: Some(mean(&x)),
                        sd: Some(sample_variance(&x).sqrt()),
                        acceptance: Some(chain.acceptance_rate(k)),
                        error: None,
                    }
                }
                Err(e @ (Error::ChainStuck { .. } | Error::NoAcceptances { .. })) => ToleranceSummary {
                    eps,
                    coordinate: k,
                    mean: None,
                    sd: None,
                    acceptance: None,
                    error: Some(e.to_string()),
                },
                Err(e) => return Err(e),
            })
        })
        .collect()
}

/// Relative changes `|m_k - m_{k-1}| / |m_{k-1}|` between consecutive means.
pub fn successive_deltas(means: &[f64]) -> Vec<f64> {
    means.windows(2).map(|w| (w[1] - w[0]).abs() / w[0].abs()).collect()
}
