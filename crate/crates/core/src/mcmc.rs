//! Likelihood-free posterior sampling: single-site MCMC-ABC with gamma
//! random-walk proposals, and a plain rejection sampler used as a
//! reference on small problems.

use std::io::{Read, Write};

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use rayon::prelude::*;
use serde::Serialize;

use crate::abc::{claims_part, DistanceConfig, SummaryStats, ToleranceSchedule};
use crate::bootstrap::{residual, simulate_rows, ResampleMode};
use crate::chainladder::{ClassicalFit, DfclParams};
use crate::error::{Error, Result};
use crate::stats::{mean, sample_variance, stream_rng};
use crate::triangle::ClaimsTriangle;

/// Independent priors: `F_j ~ Gamma(shape, scale)` and
/// `Ξ²_j ~ InvGamma(shape, scale)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PriorSpec {
    pub f_shape: Vec<f64>,
    pub f_scale: Vec<f64>,
    pub var_shape: Vec<f64>,
    pub var_scale: Vec<f64>,
}

impl PriorSpec {
    pub fn new(f_shape: Vec<f64>, f_scale: Vec<f64>, var_shape: Vec<f64>, var_scale: Vec<f64>) -> Result<Self> {
        let j = f_shape.len();
        if f_scale.len() != j || var_shape.len() != j || var_scale.len() != j {
            return Err(Error::ShapeMismatch("prior hyperparameter vectors differ in length".into()));
        }
        let all = f_shape.iter().chain(&f_scale).chain(&var_shape).chain(&var_scale);
        if let Some(v) = all.into_iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("prior hyperparameter {v} is not positive")));
        }
        Ok(Self {
            f_shape,
            f_scale,
            var_shape,
            var_scale,
        })
    }

    /// Same hyperparameters for every development period.
    pub fn uniform(dim: usize, f_shape: f64, f_scale: f64, var_shape: f64, var_scale: f64) -> Result<Self> {
        Self::new(vec![f_shape; dim], vec![f_scale; dim], vec![var_shape; dim], vec![var_scale; dim])
    }

    /// Variance prior given through the precision: `Ξ⁻² ~ Gamma(a, scale b)`
    /// is `Ξ² ~ InvGamma(a, 1/b)`.
    pub fn with_precision(dim: usize, f_shape: f64, f_scale: f64, prec_shape: f64, prec_scale: f64) -> Result<Self> {
        Self::uniform(dim, f_shape, f_scale, prec_shape, 1.0 / prec_scale)
    }

    /// Vague priors centred on the classical estimates: exponential on `F_j`
    /// with mean `f̂_j`, and `Ξ²_j` with mean `σ̂²_j` and infinite variance.
    pub fn centred_on(fit: &ClassicalFit) -> Result<Self> {
        let dim = fit.factors.len();
        Self::new(vec![1.0; dim], fit.factors.clone(), vec![2.0; dim], fit.variances.clone())
    }

    pub fn dim(&self) -> usize {
        self.f_shape.len()
    }

    pub fn f_mean(&self, j: usize) -> f64 {
        self.f_shape[j] * self.f_scale[j]
    }

    /// Prior mean of `Ξ²_j`; infinite when the shape is at most 1.
    pub fn var_mean(&self, j: usize) -> f64 {
        if self.var_shape[j] > 1.0 {
            self.var_scale[j] / (self.var_shape[j] - 1.0)
        } else {
            f64::INFINITY
        }
    }

    /// Log prior density of chain coordinate `k` (factors first, then
    /// standard deviations), up to a constant. The variance prior is carried
    /// over to `σ` with the Jacobian `2σ`.
    pub fn log_density(&self, k: usize, x: f64) -> f64 {
        let dim = self.dim();
        if k < dim {
            (self.f_shape[k] - 1.0) * x.ln() - x / self.f_scale[k]
        } else {
            let j = k - dim;
            (-2.0 * self.var_shape[j] - 1.0) * x.ln() - self.var_scale[j] / (x * x)
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> DfclParams {
        let dim = self.dim();
        let f = (0..dim)
            .map(|j| Gamma::new(self.f_shape[j], self.f_scale[j]).unwrap().sample(rng))
            .collect();
        let sigma = (0..dim)
            .map(|j| {
                let g: f64 = Gamma::new(self.var_shape[j], 1.0).unwrap().sample(rng);
                (self.var_scale[j] / g).sqrt()
            })
            .collect();
        DfclParams { f, sigma }
    }
}

/// Gamma random-walk proposal shapes and the tuning rule's constants.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProposalConfig {
    pub gamma: Vec<f64>,
    pub gamma_min: f64,
    pub window: usize,
    pub shrink: f64,
    pub grow: f64,
    pub low: f64,
    pub high: f64,
    /// Tune shapes during burn-in; off keeps the initial shapes throughout.
    pub adaptive: bool,
}

impl ProposalConfig {
    pub fn new(gamma: Vec<f64>, gamma_min: f64) -> Result<Self> {
        if !(gamma_min > 0.0) {
            return Err(Error::InvalidParameter(format!("gamma_min must be positive, got {gamma_min}")));
        }
        if let Some(g) = gamma.iter().find(|g| !(**g >= gamma_min) || !g.is_finite()) {
            return Err(Error::InvalidParameter(format!("proposal shape {g} is below gamma_min {gamma_min}")));
        }
        Ok(Self {
            gamma,
            gamma_min,
            window: 100,
            shrink: 0.9,
            grow: 1.1,
            low: 0.3,
            high: 0.5,
            adaptive: true,
        })
    }

    /// One shape for all `2J` coordinates.
    pub fn uniform(dim: usize, gamma: f64, gamma_min: f64) -> Result<Self> {
        Self::new(vec![gamma; 2 * dim], gamma_min)
    }

    /// Shapes sized from the data: a factor's proposal spread is about 2.4
    /// standard errors of `f̂_j`, a deviation's about 2.4 times `1/√(2n_j)`
    /// relative, `n_j` being the number of observed transitions. Adaptation
    /// is off.
    pub fn scaled_to(t: &ClaimsTriangle, fit: &ClassicalFit) -> Result<Self> {
        let dim = t.last();
        if fit.factors.len() != dim || fit.variances.len() != dim {
            return Err(Error::ShapeMismatch("fit does not match triangle".into()));
        }
        const SPREAD2: f64 = 2.4 * 2.4;
        let f_shapes = (0..dim).map(|j| {
            let precision = fit.factors[j].powi(2) * t.column_sum(j, dim - j) / fit.variances[j];
            (precision / SPREAD2).clamp(1.0, 1e8)
        });
        let s_shapes = (0..dim).map(|j| (2.0 * (dim - j) as f64 / SPREAD2).max(1.0));
        let mut cfg = Self::new(f_shapes.chain(s_shapes).collect(), 1.0)?;
        cfg.adaptive = false;
        Ok(cfg)
    }

    /// Applies the tuning rule to one shape given its window's mean
    /// acceptance.
    pub fn adapt(&self, mean_acceptance: f64, gamma: f64) -> f64 {
        let next = if mean_acceptance < self.low && gamma > self.gamma_min {
            self.shrink * gamma
        } else if mean_acceptance > self.high {
            self.grow * gamma
        } else {
            gamma
        };
        next.max(self.gamma_min)
    }
}

/// The tuning rule with its standard constants.
pub fn adapt_proposal(mean_acceptance: f64, gamma: f64, gamma_min: f64) -> f64 {
    ProposalConfig {
        gamma: vec![],
        gamma_min,
        window: 100,
        shrink: 0.9,
        grow: 1.1,
        low: 0.3,
        high: 0.5,
        adaptive: true,
    }
    .adapt(mean_acceptance, gamma)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum ChainInit {
    /// One draw from the prior.
    Prior,
    Fixed(DfclParams),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SamplerSettings {
    pub iterations: usize,
    pub burn_in: usize,
    /// Synthetic data sets per likelihood evaluation.
    pub synthetic_per_eval: usize,
    pub stuck_warn: usize,
    pub stuck_abort: usize,
    pub init: ChainInit,
}

impl SamplerSettings {
    pub fn new(iterations: usize, burn_in: usize) -> Self {
        Self {
            iterations,
            burn_in,
            synthetic_per_eval: 1,
            stuck_warn: 10_000,
            stuck_abort: 50_000,
            init: ChainInit::Prior,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.iterations <= self.burn_in {
            return Err(Error::InvalidParameter(format!(
                "iterations ({}) must exceed burn-in ({})",
                self.iterations, self.burn_in
            )));
        }
        if self.synthetic_per_eval == 0 {
            return Err(Error::InvalidParameter("need at least one synthetic data set per evaluation".into()));
        }
        Ok(())
    }
}

/// Mean acceptance of each coordinate over one adaptation window.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WindowRecord {
    pub iteration: usize,
    pub acceptance: Vec<f64>,
    pub gamma: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PosteriorChain {
    dim: usize,
    /// Row-major `T x 2J` states after each full sweep.
    samples: Vec<f64>,
    /// Row-major `T x 2J` acceptance flags.
    accepted: Vec<bool>,
    pub tolerance: Vec<f64>,
    pub burn_in: usize,
    pub windows: Vec<WindowRecord>,
    pub final_gamma: Vec<f64>,
    pub seed: u64,
    pub warnings: Vec<String>,
}

impl PosteriorChain {
    /// Builds a chain from stored states, e.g. a reloaded dump or a
    /// hand-made sample. Acceptance flags are set to false.
    pub fn from_states(states: &[DfclParams], burn_in: usize) -> Result<Self> {
        let first = states.first().ok_or(Error::Empty("chain"))?;
        let dim = first.dim();
        if burn_in >= states.len() {
            return Err(Error::InvalidParameter("burn-in covers the whole chain".into()));
        }
        let mut samples = Vec::with_capacity(states.len() * 2 * dim);
        for s in states {
            if s.dim() != dim {
                return Err(Error::ShapeMismatch("states differ in dimension".into()));
            }
            samples.extend(s.to_coords());
        }
        Ok(Self {
            dim,
            accepted: vec![false; samples.len()],
            samples,
            tolerance: vec![f64::INFINITY; states.len()],
            burn_in,
            windows: vec![],
            final_gamma: vec![],
            seed: 0,
            warnings: vec![],
        })
    }

    /// Number of development periods `J`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.samples.len() / (2 * self.dim)
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn state(&self, t: usize) -> DfclParams {
        let w = 2 * self.dim;
        DfclParams::from_coords(&self.samples[t * w..(t + 1) * w])
    }

    pub fn coords(&self, t: usize) -> &[f64] {
        let w = 2 * self.dim;
        &self.samples[t * w..(t + 1) * w]
    }

    pub fn accept_flags(&self, t: usize) -> &[bool] {
        let w = 2 * self.dim;
        &self.accepted[t * w..(t + 1) * w]
    }

    /// Post-burn-in trace of coordinate `k` (factors first).
    pub fn trace(&self, k: usize) -> Vec<f64> {
        (self.burn_in..self.len()).map(|t| self.coords(t)[k]).collect()
    }

    pub fn f_trace(&self, j: usize) -> Vec<f64> {
        self.trace(j)
    }

    pub fn sigma_trace(&self, j: usize) -> Vec<f64> {
        self.trace(self.dim + j)
    }

    /// Post-burn-in states, every `thin`-th one.
    pub fn draws(&self, thin: usize) -> Vec<DfclParams> {
        (self.burn_in..self.len())
            .step_by(thin.max(1))
            .map(|t| self.state(t))
            .collect()
    }

    /// Post-burn-in acceptance rate of coordinate `k`.
    pub fn acceptance_rate(&self, k: usize) -> f64 {
        let kept = self.len() - self.burn_in;
        let hits = (self.burn_in..self.len()).filter(|&t| self.accept_flags(t)[k]).count();
        hits as f64 / kept as f64
    }

    pub fn total_acceptances(&self) -> usize {
        self.accepted.iter().filter(|a| **a).count()
    }

    /// One row per iteration: `t`, factors, standard deviations, accept
    /// flags, tolerance.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["t".to_string()];
        header.extend((0..self.dim).map(|j| format!("f_{j}")));
        header.extend((0..self.dim).map(|j| format!("sigma_{j}")));
        header.extend((0..2 * self.dim).map(|k| format!("acc_{k}")));
        header.push("eps".into());
        w.write_record(&header)?;
        for t in 0..self.len() {
            let mut row = vec![t.to_string()];
            row.extend(self.coords(t).iter().map(|v| v.to_string()));
            row.extend(self.accept_flags(t).iter().map(|&a| u8::from(a).to_string()));
            row.push(self.tolerance[t].to_string());
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a dump written by [`PosteriorChain::write_csv`].
    pub fn read_csv<R: Read>(reader: R, burn_in: usize) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(reader);
        let header = rdr.headers()?.clone();
        let dim = header.iter().filter(|h| h.starts_with("f_")).count();
        if dim == 0 || header.len() != 4 * dim + 2 {
            return Err(Error::ShapeMismatch(format!("unexpected chain dump header with {} columns", header.len())));
        }
        let mut samples = Vec::new();
        let mut accepted = Vec::new();
        let mut tolerance = Vec::new();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let num = |c: usize| -> Result<f64> {
                rec[c].parse().map_err(|_| Error::Parse {
                    line: line + 2,
                    column: c + 1,
                    text: rec[c].to_string(),
                })
            };
            for c in 1..=2 * dim {
                samples.push(num(c)?);
            }
            for c in 2 * dim + 1..=4 * dim {
                accepted.push(num(c)? != 0.0);
            }
            tolerance.push(num(4 * dim + 1)?);
        }
        if burn_in >= tolerance.len() {
            return Err(Error::InvalidParameter("burn-in covers the whole chain".into()));
        }
        Ok(Self {
            dim,
            samples,
            accepted,
            tolerance,
            burn_in,
            windows: vec![],
            final_gamma: vec![],
            seed: 0,
            warnings: vec![],
        })
    }
}

/// Observed-data side of the ABC comparison, prepared once per run.
struct AbcTarget<'a> {
    t: &'a ClaimsTriangle,
    observed: SummaryStats,
    dist: &'a DistanceConfig,
    cells: Vec<(usize, usize)>,
}

impl<'a> AbcTarget<'a> {
    fn new(t: &'a ClaimsTriangle, dist: &'a DistanceConfig) -> Result<Self> {
        let observed = SummaryStats::observed(t);
        if observed.claims.len() != dist.claim_variances.len() {
            return Err(Error::ShapeMismatch(format!(
                "distance weights cover {} claims, triangle has {}",
                dist.claim_variances.len(),
                observed.claims.len()
            )));
        }
        Ok(Self {
            t,
            observed,
            dist,
            cells: t.residual_cells(),
        })
    }

    /// Residuals of the observed triangle under `p` and their moments.
    fn residuals(&self, p: &DfclParams) -> (Vec<f64>, [f64; 2]) {
        let t = self.t;
        let res: Vec<f64> = self
            .cells
            .iter()
            .map(|&(i, j)| residual(t.get(i, j), t.get(i, j - 1), p.f[j - 1], p.sigma[j - 1]))
            .collect();
        let moments = [mean(&res), sample_variance(&res).sqrt()];
        (res, moments)
    }

    /// Distance of one synthetic data set, `None` when positivity repair fails.
    fn draw_distance<R: Rng + ?Sized>(
        &self,
        p: &DfclParams,
        res: &[f64],
        moments: [f64; 2],
        rng: &mut R,
    ) -> Option<f64> {
        let rows = simulate_rows(self.t, p, res, ResampleMode::Conditional, rng).ok()?;
        Some(
            self.dist
                .distance_unchecked(&self.observed.claims, self.observed.moments, &claims_part(&rows), moments),
        )
    }

    /// Fraction of `reps` synthetic data sets within `eps`. A data set whose
    /// positivity repair fails counts as a rejection.
    fn weight<R: Rng + ?Sized>(&self, p: &DfclParams, eps: f64, reps: usize, rng: &mut R) -> f64 {
        if eps == f64::INFINITY {
            return 1.0;
        }
        let (res, moments) = self.residuals(p);
        let hits = (0..reps)
            .filter(|_| self.draw_distance(p, &res, moments, rng).is_some_and(|d| d <= eps))
            .count();
        hits as f64 / reps as f64
    }
}

/// Distances between `t` and `n` synthetic data sets simulated under `p`,
/// sorted ascending. Failed simulations count as infinitely far. Useful
/// for placing a tolerance at a quantile of what the model can reach.
pub fn distance_sample(
    t: &ClaimsTriangle,
    p: &DfclParams,
    dist: &DistanceConfig,
    n: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    if p.dim() != t.last() {
        return Err(Error::ShapeMismatch("parameters do not match triangle".into()));
    }
    let target = AbcTarget::new(t, dist)?;
    let (res, moments) = target.residuals(p);
    let mut out: Vec<f64> = (0..n.div_ceil(REJECTION_CHUNK))
        .into_par_iter()
        .flat_map_iter(|c| {
            let mut rng = stream_rng(seed, c as u64);
            let m = REJECTION_CHUNK.min(n - c * REJECTION_CHUNK);
            (0..m)
                .map(|_| target.draw_distance(p, &res, moments, &mut rng).unwrap_or(f64::INFINITY))
                .collect::<Vec<_>>()
        })
        .collect();
    out.sort_by(f64::total_cmp);
    Ok(out)
}

fn log_gamma_kernel(x: f64, shape: f64, scale: f64) -> f64 {
    (shape - 1.0) * x.ln() - x / scale - shape * scale.ln()
}

/// Runs one chain. Each iteration sweeps the `2J` coordinates in order;
/// the tolerance anneals along `sched` and the proposal shapes are tuned
/// every `window` iterations during burn-in once the tolerance has reached
/// its floor.
pub fn mcmc_abc_run(
    t: &ClaimsTriangle,
    priors: &PriorSpec,
    proposal: &ProposalConfig,
    dist: &DistanceConfig,
    sched: &ToleranceSchedule,
    settings: &SamplerSettings,
    seed: u64,
) -> Result<PosteriorChain> {
    settings.validate()?;
    let dim = t.last();
    if priors.dim() != dim || proposal.gamma.len() != 2 * dim {
        return Err(Error::ShapeMismatch(format!(
            "priors/proposal sized for {} and {} coordinates, triangle needs {}",
            2 * priors.dim(),
            proposal.gamma.len(),
            2 * dim
        )));
    }
    let target = AbcTarget::new(t, dist)?;
    let mut rng = stream_rng(seed, 0);
    let width = 2 * dim;

    let mut theta = match &settings.init {
        ChainInit::Prior => priors.sample(&mut rng).to_coords(),
        ChainInit::Fixed(p) => {
            if p.dim() != dim || p.sigma.iter().any(|s| !(*s > 0.0)) {
                return Err(Error::InvalidParameter("initial state must be positive and match the triangle".into()));
            }
            p.to_coords()
        }
    };
    let mut gamma = proposal.gamma.clone();
    let mut samples = Vec::with_capacity(settings.iterations * width);
    let mut accepted = Vec::with_capacity(settings.iterations * width);
    let mut tolerance = Vec::with_capacity(settings.iterations);
    let mut windows = Vec::new();
    let mut warnings = Vec::new();
    let mut run_length = vec![0usize; width];
    let mut window_hits = vec![0usize; width];

    for iter in 0..settings.iterations {
        let eps = sched.at(iter);
        for k in 0..width {
            let cur = theta[k];
            let g = gamma[k];
            let prop = Gamma::new(g, cur / g)
                .map_err(|e| Error::InvalidParameter(format!("proposal for coordinate {k}: {e}")))?
                .sample(&mut rng);
            let mut accept = false;
            if prop > 0.0 && prop.is_finite() {
                let log_ratio = priors.log_density(k, prop) - priors.log_density(k, cur)
                    + log_gamma_kernel(cur, g, prop / g)
                    - log_gamma_kernel(prop, g, cur / g);
                let mh = log_ratio.exp().min(1.0);
                let u: f64 = rng.random();
                // the ABC weight is at most 1, so it is only needed when u < mh
                if u < mh {
                    theta[k] = prop;
                    let w = target.weight(&DfclParams::from_coords(&theta), eps, settings.synthetic_per_eval, &mut rng);
                    accept = u < mh * w;
                    if !accept {
                        theta[k] = cur;
                    }
                }
            }
            accepted.push(accept);
            if accept {
                run_length[k] = 0;
                window_hits[k] += 1;
            } else {
                run_length[k] += 1;
                if run_length[k] == settings.stuck_warn {
                    warnings.push(format!(
                        "coordinate {k} rejected {} consecutive proposals at iteration {iter}",
                        settings.stuck_warn
                    ));
                }
                if run_length[k] >= settings.stuck_abort {
                    return Err(Error::ChainStuck {
                        coordinate: k,
                        iteration: iter,
                        rejections: run_length[k],
                    });
                }
            }
        }
        samples.extend_from_slice(&theta);
        tolerance.push(eps);

        let done = iter + 1;
        if done % proposal.window == 0 {
            let acceptance: Vec<f64> = window_hits.iter().map(|&h| h as f64 / proposal.window as f64).collect();
            if proposal.adaptive && done >= proposal.window && done <= settings.burn_in && sched.at_floor(iter) {
                for k in 0..width {
                    gamma[k] = proposal.adapt(acceptance[k], gamma[k]);
                }
            }
            windows.push(WindowRecord {
                iteration: done,
                acceptance,
                gamma: gamma.clone(),
            });
            window_hits.iter_mut().for_each(|h| *h = 0);
        }
    }

    Ok(PosteriorChain {
        dim,
        samples,
        accepted,
        tolerance,
        burn_in: settings.burn_in,
        windows,
        final_gamma: gamma,
        seed,
        warnings,
    })
}

/// Independent chains, one per seed, run in parallel.
pub fn run_chains(
    t: &ClaimsTriangle,
    priors: &PriorSpec,
    proposal: &ProposalConfig,
    dist: &DistanceConfig,
    sched: &ToleranceSchedule,
    settings: &SamplerSettings,
    seeds: &[u64],
) -> Result<Vec<PosteriorChain>> {
    seeds
        .par_iter()
        .map(|&s| mcmc_abc_run(t, priors, proposal, dist, sched, settings, s))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RejectionSample {
    pub accepted: Vec<DfclParams>,
    pub proposed: usize,
}

impl RejectionSample {
    pub fn acceptance_rate(&self) -> f64 {
        self.accepted.len() as f64 / self.proposed as f64
    }

    /// Values of coordinate `k` (factors first) across accepted draws.
    pub fn coordinate(&self, k: usize) -> Vec<f64> {
        self.accepted.iter().map(|p| p.to_coords()[k]).collect()
    }
}

const REJECTION_CHUNK: usize = 4096;

/// Prior draws kept when one synthetic data set lands within `eps`.
pub fn rejection_abc(
    t: &ClaimsTriangle,
    priors: &PriorSpec,
    dist: &DistanceConfig,
    eps: f64,
    draws: usize,
    seed: u64,
) -> Result<RejectionSample> {
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance must be positive, got {eps}")));
    }
    if priors.dim() != t.last() {
        return Err(Error::ShapeMismatch("prior dimension does not match triangle".into()));
    }
    let target = AbcTarget::new(t, dist)?;
    let chunks = draws.div_ceil(REJECTION_CHUNK);
    let accepted: Vec<DfclParams> = (0..chunks)
        .into_par_iter()
        .flat_map_iter(|c| {
            let mut rng = stream_rng(seed, c as u64);
            let n = REJECTION_CHUNK.min(draws - c * REJECTION_CHUNK);
            let mut kept = Vec::new();
            for _ in 0..n {
                let p = priors.sample(&mut rng);
                if target.weight(&p, eps, 1, &mut rng) == 1.0 {
                    kept.push(p);
                }
            }
            kept
        })
        .collect();
    if accepted.is_empty() {
        return Err(Error::NoAcceptances { draws, tolerance: eps });
    }
    Ok(RejectionSample {
        accepted,
        proposed: draws,
    })
}
