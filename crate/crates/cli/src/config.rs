//! Flat `key = value` run configuration. Later assignments win, so a file
//! can be layered under command-line overrides.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use dfcl::abc::{Metric, MomentMode};
use dfcl::bootstrap::ResampleMode;
use dfcl::diagnostics::StatisticForm;
use dfcl::inference::ResidualSource;
use dfcl::synthetic::StandardResidual;
use dfcl::Layout;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PriorKind {
    /// Exponential on `F_j` with mean `f̂_j`, `Ξ²_j` with mean `σ̂²_j`.
    Centred,
    /// The same Gamma / inverse-Gamma hyperparameters for every period.
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ProposalKind {
    /// `gamma_init` everywhere, tuned during burn-in.
    Adaptive,
    /// Shapes sized from the classical standard errors, never tuned.
    Scaled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum InitKind {
    Prior,
    Classical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RouteSel {
    Classical,
    Bootstrap,
    Abc,
    Credibility,
    All,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub input: Option<PathBuf>,
    pub layout: Layout,
    pub scale: f64,
    pub header: bool,
    pub out: PathBuf,
    pub seed: u64,
    /// One chain per seed; empty means `[seed]`.
    pub seeds: Vec<u64>,
    pub route: RouteSel,

    pub bootstrap_draws: usize,
    pub resample: ResampleMode,

    pub iterations: usize,
    pub burn_in: usize,
    pub synthetic_per_eval: usize,
    pub eps_min: f64,
    pub anchor: f64,
    pub slope: f64,
    pub metric: Metric,
    pub moments: MomentMode,
    pub moment_draws: usize,
    pub proposal: ProposalKind,
    pub gamma_init: f64,
    pub gamma_min: f64,
    pub init: InitKind,
    pub stuck_warn: usize,
    pub stuck_abort: usize,
    pub prior: PriorKind,
    pub f_shape: f64,
    pub f_scale: f64,
    pub prec_shape: f64,
    pub prec_scale: f64,

    pub thin: usize,
    pub residual_source: ResidualSource,
    pub var_levels: Vec<f64>,

    pub max_lag: usize,
    pub geweke_first: f64,
    pub geweke_last: f64,
    pub geweke_form: StatisticForm,
    pub gelman_form: StatisticForm,
    pub grid_points: usize,

    pub eps_list: Vec<f64>,
    pub study_coordinate: usize,

    pub gen_periods: usize,
    pub gen_f: f64,
    pub gen_sigma: f64,
    pub first_lo: f64,
    pub first_hi: f64,
    pub residual_law: StandardResidual,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            input: None,
            layout: Layout::Cumulative,
            scale: 1.0,
            header: false,
            out: PathBuf::from("out"),
            seed: 1,
            seeds: vec![],
            route: RouteSel::All,
            bootstrap_draws: 1000,
            resample: ResampleMode::Conditional,
            iterations: 200_000,
            burn_in: 50_000,
            synthetic_per_eval: 1,
            eps_min: 1e-5,
            anchor: 20_000.0,
            slope: 10.0,
            metric: Metric::ScaledEuclidean,
            moments: MomentMode::Parametric,
            moment_draws: 10_000,
            proposal: ProposalKind::Adaptive,
            gamma_init: 10.0,
            gamma_min: 1.0,
            init: InitKind::Prior,
            stuck_warn: 10_000,
            stuck_abort: 50_000,
            prior: PriorKind::Centred,
            f_shape: 2.0,
            f_scale: 0.6,
            prec_shape: 2.0,
            prec_scale: 0.5,
            thin: 10,
            residual_source: ResidualSource::Fixed,
            var_levels: vec![0.95, 0.99],
            max_lag: 50,
            geweke_first: 0.1,
            geweke_last: 0.5,
            geweke_form: StatisticForm::Standard,
            gelman_form: StatisticForm::Standard,
            grid_points: 20,
            eps_list: vec![1e-2, 1e-3, 1e-4, 1e-5],
            study_coordinate: 0,
            gen_periods: 9,
            gen_f: 1.2,
            gen_sigma: 1.0,
            first_lo: 130.0,
            first_hi: 530.0,
            residual_law: StandardResidual::Uniform,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value.parse().map_err(|e| anyhow!("{key}: cannot parse {value:?}: {e}"))
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse(key, s))
        .collect()
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => bail!("{key}: expected a boolean, got {value:?}"),
    }
}

fn parse_word<T>(key: &str, value: &str, words: &[(&str, T)]) -> Result<T>
where
    T: Copy,
{
    let v = value.to_ascii_lowercase();
    words
        .iter()
        .find(|(w, _)| *w == v)
        .map(|(_, t)| *t)
        .ok_or_else(|| anyhow!("{key}: unknown value {value:?}"))
}

impl RunConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        let key = key.trim().to_ascii_lowercase().replace('-', "_");
        let k = key.as_str();
        match k {
            "input" => self.input = Some(PathBuf::from(value)),
            "layout" => self.layout = parse(k, value)?,
            "scale" => self.scale = parse(k, value)?,
            "header" => self.header = parse_bool(k, value)?,
            "out" => self.out = PathBuf::from(value),
            "seed" => self.seed = parse(k, value)?,
            "seeds" => self.seeds = parse_list(k, value)?,
            "route" => {
                self.route = parse_word(
                    k,
                    value,
                    &[
                        ("classical", RouteSel::Classical),
                        ("freq", RouteSel::Bootstrap),
                        ("bootstrap", RouteSel::Bootstrap),
                        ("abc", RouteSel::Abc),
                        ("bayes", RouteSel::Abc),
                        ("credibility", RouteSel::Credibility),
                        ("cred", RouteSel::Credibility),
                        ("all", RouteSel::All),
                    ],
                )?
            }
            "bootstrap_draws" => self.bootstrap_draws = parse(k, value)?,
            "resample" => self.resample = parse(k, value)?,
            "t" | "iterations" => self.iterations = parse(k, value)?,
            "t_b" | "burn_in" => self.burn_in = parse(k, value)?,
            "l" | "synthetic_per_eval" => self.synthetic_per_eval = parse(k, value)?,
            "eps_min" => self.eps_min = parse(k, value)?,
            "anchor" => self.anchor = parse(k, value)?,
            "slope" => self.slope = parse(k, value)?,
            "metric" => self.metric = parse(k, value)?,
            "moments" => self.moments = parse(k, value)?,
            "moment_draws" => self.moment_draws = parse(k, value)?,
            "proposal" => {
                self.proposal = parse_word(k, value, &[("adaptive", ProposalKind::Adaptive), ("scaled", ProposalKind::Scaled)])?
            }
            "gamma_init" => self.gamma_init = parse(k, value)?,
            "gamma_min" => self.gamma_min = parse(k, value)?,
            "init" => self.init = parse_word(k, value, &[("prior", InitKind::Prior), ("classical", InitKind::Classical)])?,
            "stuck_warn" => self.stuck_warn = parse(k, value)?,
            "stuck_abort" => self.stuck_abort = parse(k, value)?,
            "prior" => self.prior = parse_word(k, value, &[("centred", PriorKind::Centred), ("centered", PriorKind::Centred), ("uniform", PriorKind::Uniform)])?,
            "f_shape" => self.f_shape = parse(k, value)?,
            "f_scale" => self.f_scale = parse(k, value)?,
            "prec_shape" => self.prec_shape = parse(k, value)?,
            "prec_scale" => self.prec_scale = parse(k, value)?,
            "thin" => self.thin = parse(k, value)?,
            "residual_source" => self.residual_source = parse(k, value)?,
            "var_levels" => self.var_levels = parse_list(k, value)?,
            "max_lag" => self.max_lag = parse(k, value)?,
            "geweke_first" => self.geweke_first = parse(k, value)?,
            "geweke_last" => self.geweke_last = parse(k, value)?,
            "geweke_form" => self.geweke_form = parse(k, value)?,
            "gelman_form" => self.gelman_form = parse(k, value)?,
            "grid_points" => self.grid_points = parse(k, value)?,
            "eps_list" => self.eps_list = parse_list(k, value)?,
            "study_coordinate" => self.study_coordinate = parse(k, value)?,
            "gen_periods" => self.gen_periods = parse(k, value)?,
            "gen_f" => self.gen_f = parse(k, value)?,
            "gen_sigma" => self.gen_sigma = parse(k, value)?,
            "first_lo" => self.first_lo = parse(k, value)?,
            "first_hi" => self.first_hi = parse(k, value)?,
            "residual_law" => self.residual_law = parse(k, value)?,
            _ => bail!("unknown configuration key {key:?}"),
        }
        Ok(())
    }

    /// `KEY=VALUE`, as given to `--set`.
    pub fn set_pair(&mut self, pair: &str) -> Result<()> {
        let (k, v) = pair.split_once('=').ok_or_else(|| anyhow!("expected KEY=VALUE, got {pair:?}"))?;
        self.set(k, v)
    }

    /// Applies a config file: one `key = value` per line, `#` starts a
    /// comment. Relative `input`/`out` paths resolve against the file's
    /// directory.
    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("{}:{}: expected key = value", path.display(), n + 1))?;
            self.set(k, v).with_context(|| format!("{}:{}", path.display(), n + 1))?;
            match k.trim().to_ascii_lowercase().as_str() {
                "input" => self.input = self.input.take().map(|p| base.join(p)),
                "out" => self.out = base.join(&self.out),
                _ => {}
            }
        }
        Ok(())
    }

    pub fn chain_seeds(&self) -> Vec<u64> {
        if self.seeds.is_empty() {
            vec![self.seed]
        } else {
            self.seeds.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            bail!("scale must be positive");
        }
        if self.iterations <= self.burn_in {
            bail!("iterations ({}) must exceed burn_in ({})", self.iterations, self.burn_in);
        }
        if self.synthetic_per_eval == 0 || self.thin == 0 || self.bootstrap_draws < 2 {
            bail!("synthetic_per_eval and thin must be positive, bootstrap_draws at least 2");
        }
        if self.eps_min.is_nan() || self.eps_min <= 0.0 {
            bail!("eps_min must be positive");
        }
        if !(self.gamma_min > 0.0 && self.gamma_init >= self.gamma_min) {
            bail!("need 0 < gamma_min <= gamma_init");
        }
        if self.var_levels.iter().any(|l| !(*l > 0.0 && *l < 1.0)) {
            bail!("VaR levels must lie in (0, 1)");
        }
        if self.eps_list.is_empty() || self.eps_list.iter().any(|e| e.is_nan() || *e <= 0.0) {
            bail!("eps_list needs positive tolerances");
        }
        if self.gen_periods == 0 {
            bail!("gen_periods must be positive");
        }
        Ok(())
    }

    pub fn require_input(&self) -> Result<&Path> {
        self.input.as_deref().ok_or_else(|| anyhow!("no input triangle: pass --input or set input in the config"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_follow_the_long_real_data_run() {
        let c = RunConfig::default();
        assert_eq!((c.iterations, c.burn_in, c.synthetic_per_eval), (200_000, 50_000, 1));
        assert_eq!(c.eps_min, 1e-5);
        assert_eq!(c.metric, Metric::ScaledEuclidean);
        assert_eq!(c.bootstrap_draws, 1000);
        c.validate().unwrap();
    }

    #[test]
    fn overrides_and_aliases() {
        let mut c = RunConfig::default();
        c.set_pair("T=5000").unwrap();
        c.set_pair("T_b = 1000").unwrap();
        c.set_pair("eps-list=1,0.5").unwrap();
        c.set_pair("route=cred").unwrap();
        c.set_pair("metric=mahalanobis").unwrap();
        assert_eq!(c.iterations, 5000);
        assert_eq!(c.burn_in, 1000);
        assert_eq!(c.eps_list, vec![1.0, 0.5]);
        assert_eq!(c.route, RouteSel::Credibility);
        assert_eq!(c.metric, Metric::Mahalanobis);
    }

    #[test]
    fn bad_values_are_rejected() {
        let mut c = RunConfig::default();
        assert!(c.set_pair("T=abc").is_err());
        assert!(c.set_pair("colour=red").is_err());
        assert!(c.set_pair("novalue").is_err());
        c.set_pair("T_b=300000").unwrap();
        assert!(c.validate().is_err());
    }

    #[test]
    fn file_paths_resolve_next_to_the_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        std::fs::write(&path, "# comment\ninput = tri.csv\nscale = 10000  # units\nseeds = 1, 2, 3\n").unwrap();
        let mut c = RunConfig::default();
        c.apply_file(&path).unwrap();
        assert_eq!(c.input.as_deref(), Some(dir.path().join("tri.csv").as_path()));
        assert_eq!(c.scale, 10_000.0);
        assert_eq!(c.chain_seeds(), vec![1, 2, 3]);
    }
}
