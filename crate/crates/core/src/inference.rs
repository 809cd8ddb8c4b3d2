//! Posterior summaries, predictive simulation, VaR and the three MSEP
//! decompositions (bootstrap, posterior, credibility).

use std::io::Write;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::bootstrap::{compute_residuals, freq_param_error, step_positive, BootstrapDraw, ResidualSet};
use crate::chainladder::{freq_process_variance, predict, ClassicalFit, DfclParams, YearTerms};
use crate::error::{Error, Result};
use crate::mcmc::PosteriorChain;
use crate::stats::{mean, population_variance, quantile_sorted, sorted, stream_rng};
use crate::triangle::ClaimsTriangle;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointEstimates {
    pub mmse: DfclParams,
    /// Posterior mean of `σ²_j`.
    pub mmse_sigma2: Vec<f64>,
    /// Coordinate-wise histogram modes.
    pub map: DfclParams,
}

pub fn point_estimates(chain: &PosteriorChain) -> Result<PointEstimates> {
    if chain.len() <= chain.burn_in {
        return Err(Error::Empty("post-burn-in chain"));
    }
    let dim = chain.dim();
    let traces: Vec<Vec<f64>> = (0..2 * dim).map(|k| chain.trace(k)).collect();
    let means: Vec<f64> = traces.iter().map(|x| mean(x)).collect();
    let modes: Vec<f64> = traces.iter().map(|x| histogram_mode(x)).collect();
    let mmse_sigma2 = traces[dim..]
        .iter()
        .map(|x| x.iter().map(|s| s * s).sum::<f64>() / x.len() as f64)
        .collect();
    Ok(PointEstimates {
        mmse: DfclParams::from_coords(&means),
        mmse_sigma2,
        map: DfclParams::from_coords(&modes),
    })
}

/// Centre of the fullest bin of a Freedman-Diaconis histogram.
pub fn histogram_mode(xs: &[f64]) -> f64 {
    let s = sorted(xs);
    let (lo, hi) = (s[0], s[s.len() - 1]);
    let iqr = quantile_sorted(&s, 0.75) - quantile_sorted(&s, 0.25);
    let width = 2.0 * iqr / (s.len() as f64).cbrt();
    if !(width > 0.0) || hi == lo {
        // degenerate spread: fall back to the most frequent exact value
        let mut best = (s[0], 0usize);
        let mut k = 0;
        while k < s.len() {
            let run = s[k..].iter().take_while(|v| **v == s[k]).count();
            if run > best.1 {
                best = (s[k], run);
            }
            k += run;
        }
        return best.0;
    }
    let bins = (((hi - lo) / width).ceil() as usize).clamp(1, 100_000);
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for v in &s {
        counts[(((v - lo) / width) as usize).min(bins - 1)] += 1;
    }
    let best = (0..bins).max_by_key(|&b| (counts[b], std::cmp::Reverse(b))).unwrap();
    lo + (best as f64 + 0.5) * width
}

/// Where the innovations of a predictive simulation come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ResidualSource {
    /// The residual set handed in by the caller (usually the classical one).
    Fixed,
    /// Residuals recomputed on the data under each conditioning draw.
    PerDraw,
    /// Standard normal innovations.
    Gaussian,
}

impl std::str::FromStr for ResidualSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "fixed" | "classical" => Ok(Self::Fixed),
            "per-draw" | "per_draw" => Ok(Self::PerDraw),
            "gaussian" => Ok(Self::Gaussian),
            other => Err(Error::InvalidParameter(format!("unknown residual source {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PredictiveSample {
    /// Simulated future cells in row-major order.
    pub future: Vec<f64>,
    pub ultimates: Vec<f64>,
    pub total: f64,
}

fn simulate_future<R: Rng + ?Sized>(
    t: &ClaimsTriangle,
    p: &DfclParams,
    innovations: &Innovations,
    rng: &mut R,
) -> Result<PredictiveSample> {
    let last = t.last();
    let mut future = Vec::with_capacity(last * (last + 1) / 2);
    let mut ultimates = Vec::with_capacity(last + 1);
    for i in 0..=last {
        let mut c = t.get(i, last - i);
        for j in last - i + 1..=last {
            c = step_positive(c, p.f[j - 1], p.sigma[j - 1], |r: &mut R| innovations.draw(r), rng, (i, j))?;
            future.push(c);
        }
        ultimates.push(c);
    }
    let total = ultimates.iter().sum();
    Ok(PredictiveSample {
        future,
        ultimates,
        total,
    })
}

enum Innovations {
    Empirical(Vec<f64>),
    Gaussian,
}

impl Innovations {
    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Innovations::Empirical(v) => v[rng.random_range(0..v.len())],
            Innovations::Gaussian => StandardNormal.sample(rng),
        }
    }

    fn for_draw(source: ResidualSource, fixed: &ResidualSet, t: &ClaimsTriangle, p: &DfclParams) -> Result<Self> {
        Ok(match source {
            ResidualSource::Fixed => Innovations::Empirical(fixed.values.clone()),
            ResidualSource::PerDraw => Innovations::Empirical(compute_residuals(t, p)?.values),
            ResidualSource::Gaussian => Innovations::Gaussian,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PredictiveConfig {
    /// Keep every `thin`-th post-burn-in state.
    pub thin: usize,
    pub source: ResidualSource,
    pub seed: u64,
}

impl PredictiveConfig {
    pub fn new(seed: u64) -> Self {
        Self {
            thin: 10,
            source: ResidualSource::Fixed,
            seed,
        }
    }
}

/// One simulation per conditioning parameter vector; simulation `k` uses
/// stream `k` of the seed.
fn simulate_many(
    t: &ClaimsTriangle,
    params: &[DfclParams],
    residuals: &ResidualSet,
    source: ResidualSource,
    seed: u64,
) -> Result<Vec<PredictiveSample>> {
    if params.is_empty() {
        return Err(Error::Empty("conditioning draws"));
    }
    if source == ResidualSource::Fixed && residuals.is_empty() {
        return Err(Error::Empty("residual set"));
    }
    params
        .par_iter()
        .enumerate()
        .map(|(k, p)| {
            let innov = Innovations::for_draw(source, residuals, t, p)?;
            simulate_future(t, p, &innov, &mut stream_rng(seed, k as u64))
        })
        .collect()
}

/// Future triangles integrating over the (thinned) posterior.
pub fn predictive_full(
    chain: &PosteriorChain,
    t: &ClaimsTriangle,
    residuals: &ResidualSet,
    cfg: &PredictiveConfig,
) -> Result<Vec<PredictiveSample>> {
    simulate_many(t, &chain.draws(cfg.thin), residuals, cfg.source, cfg.seed)
}

/// Future triangles under one fixed parameter vector.
pub fn predictive_conditional(
    params: &DfclParams,
    t: &ClaimsTriangle,
    residuals: &ResidualSet,
    sims: usize,
    source: ResidualSource,
    seed: u64,
) -> Result<Vec<PredictiveSample>> {
    simulate_many(t, &vec![params.clone(); sims], residuals, source, seed)
}

/// Factors fixed at `f`, standard deviations taken from the thinned
/// posterior draws.
pub fn predictive_rao_blackwell(
    f: &[f64],
    chain: &PosteriorChain,
    t: &ClaimsTriangle,
    residuals: &ResidualSet,
    cfg: &PredictiveConfig,
) -> Result<Vec<PredictiveSample>> {
    let params: Vec<DfclParams> = chain
        .draws(cfg.thin)
        .into_iter()
        .map(|d| DfclParams {
            f: f.to_vec(),
            sigma: d.sigma,
        })
        .collect();
    simulate_many(t, &params, residuals, cfg.source, cfg.seed)
}

/// Smallest `x` with empirical `P[X - mean > x] <= 1 - level`.
pub fn value_at_risk(values: &[f64], level: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Empty("predictive sample"));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidParameter(format!("VaR level must lie in (0,1), got {level}")));
    }
    let m = mean(values);
    let s = sorted(values);
    let n = s.len();
    let allowed = (1.0 - level) * n as f64 + 1e-9;
    let mut k = 0;
    while k < n {
        let ties = s[k..].iter().take_while(|v| **v == s[k]).count();
        let above = n - (k + ties);
        if above as f64 <= allowed {
            return Ok(s[k] - m);
        }
        k += ties;
    }
    unreachable!("the largest value always satisfies the bound")
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VarReport {
    pub level: f64,
    pub per_year: Vec<f64>,
    pub total: f64,
}

pub fn var_risk(samples: &[PredictiveSample], level: f64) -> Result<VarReport> {
    let first = samples.first().ok_or(Error::Empty("predictive sample"))?;
    let per_year = (0..first.ultimates.len())
        .map(|i| {
            let xs: Vec<f64> = samples.iter().map(|s| s.ultimates[i]).collect();
            value_at_risk(&xs, level)
        })
        .collect::<Result<_>>()?;
    let totals: Vec<f64> = samples.iter().map(|s| s.total).collect();
    Ok(VarReport {
        level,
        per_year,
        total: value_at_risk(&totals, level)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Route {
    Freq,
    Bayes,
    Cred,
}

impl std::fmt::Display for Route {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Route::Freq => "freq",
            Route::Bayes => "bayes",
            Route::Cred => "cred",
        })
    }
}

/// One accident year (or the total) of an MSEP decomposition. Variances
/// are stored on the variance scale; the `_sd` fields are square roots.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MsepRow {
    pub accident_year: Option<usize>,
    pub reserve: f64,
    pub process_variance: f64,
    pub estimation_variance: f64,
    pub msep: f64,
    pub process_sd: f64,
    pub estimation_sd: f64,
    pub msep_sd: f64,
    pub vco: f64,
}

impl MsepRow {
    pub fn new(accident_year: Option<usize>, reserve: f64, process_variance: f64, estimation_variance: f64) -> Self {
        let msep = process_variance + estimation_variance;
        Self {
            accident_year,
            reserve,
            process_variance,
            estimation_variance,
            msep,
            process_sd: process_variance.sqrt(),
            estimation_sd: estimation_variance.sqrt(),
            msep_sd: msep.sqrt(),
            vco: if reserve != 0.0 { msep.sqrt() / reserve } else { 0.0 },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MsepReport {
    pub route: Route,
    pub rows: Vec<MsepRow>,
    pub total: MsepRow,
}

impl MsepReport {
    fn assemble(route: Route, reserves: &[f64], process: &YearTerms, estimation: &YearTerms) -> Self {
        let rows = (0..reserves.len())
            .map(|i| MsepRow::new(Some(i), reserves[i], process.per_year[i], estimation.per_year[i]))
            .collect();
        Self {
            route,
            rows,
            total: MsepRow::new(None, reserves.iter().sum(), process.total, estimation.total),
        }
    }

    /// CSV with one row per accident year and a final `total` row.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record([
            "route",
            "accident_year",
            "reserve",
            "process_sd",
            "estimation_sd",
            "msep_sd",
            "vco",
        ])?;
        for row in self.rows.iter().chain(std::iter::once(&self.total)) {
            w.write_record([
                self.route.to_string(),
                row.accident_year.map_or("total".to_string(), |i| i.to_string()),
                row.reserve.to_string(),
                row.process_sd.to_string(),
                row.estimation_sd.to_string(),
                row.msep_sd.to_string(),
                row.vco.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Plug-in process variance plus bootstrap estimation error.
pub fn freq_msep(t: &ClaimsTriangle, fit: &ClassicalFit, draws: &[BootstrapDraw]) -> Result<MsepReport> {
    let pred = predict(t, &fit.factors)?;
    let process = freq_process_variance(t, &fit.factors, &fit.variances)?;
    let estimation = freq_param_error(draws, t)?;
    Ok(MsepReport::assemble(Route::Freq, &pred.reserves, &process, &estimation))
}

/// Process variance from posterior moments of the factors and variances;
/// estimation error from the posterior spread of the factor products.
pub fn bayes_msep(chain: &PosteriorChain, t: &ClaimsTriangle) -> Result<MsepReport> {
    if chain.len() <= chain.burn_in {
        return Err(Error::Empty("post-burn-in chain"));
    }
    let dim = chain.dim();
    if dim != t.last() {
        return Err(Error::ShapeMismatch("chain dimension does not match triangle".into()));
    }
    let f_traces: Vec<Vec<f64>> = (0..dim).map(|j| chain.f_trace(j)).collect();
    let ef: Vec<f64> = f_traces.iter().map(|x| mean(x)).collect();
    let ef2: Vec<f64> = f_traces.iter().map(|x| x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).collect();
    let es2: Vec<f64> = (0..dim)
        .map(|j| {
            let x = chain.sigma_trace(j);
            x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64
        })
        .collect();

    let diag = t.anti_diagonal();
    let last = t.last();
    let reserves: Vec<f64> = (0..=last)
        .map(|i| diag[i] * ef[last - i..].iter().product::<f64>() - diag[i])
        .collect();
    let gamma: Vec<f64> = (0..=last)
        .map(|i| diag[i] * gamma_sum(last - i, &ef, &es2, &ef2))
        .collect();
    let delta: Vec<f64> = (0..=last)
        .map(|i| {
            let a = last - i;
            let second: f64 = ef2[a..].iter().product();
            let first: f64 = ef[a..].iter().map(|v| v * v).product();
            diag[i] * diag[i] * (second - first)
        })
        .collect();
    let totals: Vec<f64> = (0..f_traces[0].len())
        .map(|s| (0..=last).map(|i| diag[i] * (last - i..dim).map(|j| f_traces[j][s]).product::<f64>()).sum())
        .collect();
    let process = YearTerms {
        total: gamma.iter().sum(),
        per_year: gamma,
    };
    let estimation = YearTerms {
        per_year: delta,
        total: population_variance(&totals),
    };
    Ok(MsepReport::assemble(Route::Bayes, &reserves, &process, &estimation))
}

/// `Σ_{j>=a} Π_{a<=m<j} mean_m · var_j · Π_{n>j} second_n`.
fn gamma_sum(a: usize, mean: &[f64], var: &[f64], second: &[f64]) -> f64 {
    let dim = mean.len();
    (a..dim)
        .map(|j| {
            let before: f64 = mean[a..j].iter().product();
            let after: f64 = second[j + 1..].iter().product();
            before * var[j] * after
        })
        .sum()
}

/// Closed-form credibility MSEP under diffuse priors. The total estimation
/// error includes the covariance between accident years that share
/// development factors.
pub fn cred_msep(t: &ClaimsTriangle, f: &[f64], sigma2: &[f64]) -> Result<MsepReport> {
    let dim = t.last();
    if f.len() != dim || sigma2.len() != dim {
        return Err(Error::ShapeMismatch("estimates do not match triangle".into()));
    }
    let pred = predict(t, f)?;
    let diag = t.anti_diagonal();
    let second: Vec<f64> = (0..dim)
        .map(|j| f[j] * f[j] + sigma2[j] / t.column_sum(j, dim - j))
        .collect();
    let gamma: Vec<f64> = (0..=dim).map(|i| diag[i] * gamma_sum(dim - i, f, sigma2, &second)).collect();

    // Cov of C_i Π_{j>=a_i} F_j and C_k Π_{j>=a_k} F_j under independent factors
    let cross = |a: usize, b: usize| -> f64 {
        let (lo, hi) = (a.min(b), a.max(b));
        let shared: f64 = f[lo..hi].iter().product();
        let tail2: f64 = second[hi..].iter().product();
        let tail1: f64 = f[hi..].iter().map(|v| v * v).product();
        shared * (tail2 - tail1)
    };
    let delta: Vec<f64> = (0..=dim).map(|i| diag[i] * diag[i] * cross(dim - i, dim - i)).collect();
    let delta_total: f64 = (0..=dim)
        .flat_map(|i| (0..=dim).map(move |k| (i, k)))
        .map(|(i, k)| diag[i] * diag[k] * cross(dim - i, dim - k))
        .sum();

    let process = YearTerms {
        total: gamma.iter().sum(),
        per_year: gamma,
    };
    let estimation = YearTerms {
        per_year: delta,
        total: delta_total,
    };
    Ok(MsepReport::assemble(Route::Cred, &pred.reserves, &process, &estimation))
}
