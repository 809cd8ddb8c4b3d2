use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use dfcl::abc::{DistanceConfig, MomentCovariance, MomentMode, ToleranceSchedule};
use dfcl::bootstrap::{compute_residuals, run_bootstrap};
use dfcl::chainladder::{predict, ClassicalFit, DfclParams};
use dfcl::diagnostics::{diagnose, welch_psd, DiagnosticConfig, GewekeConfig};
use dfcl::inference::{
    bayes_msep, cred_msep, freq_msep, point_estimates, predictive_full, var_risk, MsepReport, PredictiveConfig,
};
use dfcl::mcmc::{run_chains, ChainInit, PosteriorChain, PriorSpec, ProposalConfig, SamplerSettings};
use dfcl::stats::stream_rng;
use dfcl::study::{successive_deltas, tolerance_study};
use dfcl::synthetic::{generate, FirstColumn, GeneratorSpec};
use dfcl::ClaimsTriangle;
use serde::Serialize;

use crate::config::{InitKind, PriorKind, ProposalKind, RouteSel, RunConfig};
use crate::output::{header, num, Outputs};

fn load(cfg: &RunConfig) -> Result<ClaimsTriangle> {
    let path = cfg.require_input()?;
    ClaimsTriangle::load(path, cfg.layout, cfg.scale, cfg.header).with_context(|| format!("loading {}", path.display()))
}

fn read_chains(paths: &[PathBuf], burn_in: usize) -> Result<Vec<PosteriorChain>> {
    if paths.is_empty() {
        bail!("no chain dumps given: pass --chain FILE (repeatable)");
    }
    paths
        .iter()
        .map(|p| {
            let f = File::open(p).with_context(|| format!("opening {}", p.display()))?;
            PosteriorChain::read_csv(BufReader::new(f), burn_in).with_context(|| format!("reading {}", p.display()))
        })
        .collect()
}

type Pick = fn(&dfcl::diagnostics::ParameterDiagnostics) -> &Vec<(usize, Option<f64>)>;

fn coordinate_names(dim: usize) -> Vec<String> {
    (0..dim).map(|j| format!("f_{j}")).chain((0..dim).map(|j| format!("sigma_{j}"))).collect()
}

fn msep_outputs(out: &mut Outputs, name: &str, report: &MsepReport) -> Result<()> {
    out.with_writer(&format!("{name}.csv"), |w| report.write_csv(w))?;
    out.json(&format!("{name}.json"), report)
}

#[derive(Serialize)]
struct FitSummary<'a> {
    factors: &'a [f64],
    sigma: Vec<f64>,
    variances: &'a [f64],
    ultimates: &'a [f64],
    reserves: &'a [f64],
    total_reserve: f64,
}

pub fn fit(cfg: &RunConfig, out: &mut Outputs) -> Result<()> {
    let t = load(cfg)?;
    let fit = ClassicalFit::estimate(&t)?;
    let pred = predict(&t, &fit.factors)?;
    let sigma: Vec<f64> = fit.variances.iter().map(|v| v.sqrt()).collect();

    let rows: Vec<Vec<String>> = (0..fit.factors.len())
        .map(|j| vec![j.to_string(), num(fit.factors[j]), num(sigma[j]), num(fit.variances[j])])
        .collect();
    out.csv("parameters.csv", &header(&["j", "f", "sigma", "sigma2"]), &rows)?;

    let cols: Vec<String> = std::iter::once("accident_year".to_string())
        .chain((0..=t.last()).map(|j| format!("c_{j}")))
        .collect();
    let rows: Vec<Vec<String>> = pred
        .completed
        .iter()
        .enumerate()
        .map(|(i, r)| std::iter::once(i.to_string()).chain(r.iter().map(|v| num(*v))).collect())
        .collect();
    out.csv("completed.csv", &cols, &rows)?;
    reserves_table(out, &t, &pred.ultimates, &pred.reserves, &[])?;
    out.json(
        "fit.json",
        &FitSummary {
            factors: &fit.factors,
            sigma,
            variances: &fit.variances,
            ultimates: &pred.ultimates,
            reserves: &pred.reserves,
            total_reserve: pred.total_reserve,
        },
    )
}

/// `extra` holds named reserve columns from other estimators.
fn reserves_table(
    out: &mut Outputs,
    t: &ClaimsTriangle,
    ultimates: &[f64],
    reserves: &[f64],
    extra: &[(&str, Vec<f64>)],
) -> Result<()> {
    let latest = t.anti_diagonal();
    let mut cols = header(&["accident_year", "latest", "ultimate", "reserve"]);
    cols.extend(extra.iter().map(|(n, _)| n.to_string()));
    let mut rows: Vec<Vec<String>> = (0..reserves.len())
        .map(|i| {
            let mut r = vec![i.to_string(), num(latest[i]), num(ultimates[i]), num(reserves[i])];
            r.extend(extra.iter().map(|(_, v)| num(v[i])));
            r
        })
        .collect();
    let mut total = vec![
        "total".to_string(),
        num(latest.iter().sum()),
        num(ultimates.iter().sum()),
        num(reserves.iter().sum()),
    ];
    total.extend(extra.iter().map(|(_, v)| num(v.iter().sum())));
    rows.push(total);
    out.csv("reserves.csv", &cols, &rows)
}

fn freq_report(cfg: &RunConfig, t: &ClaimsTriangle, out: &mut Outputs) -> Result<MsepReport> {
    let fit = ClassicalFit::estimate(t)?;
    let p = fit.params()?;
    let r = compute_residuals(t, &p)?;
    let draws = run_bootstrap(t, &p, &r, cfg.resample, cfg.bootstrap_draws, cfg.seed)?;
    let cols: Vec<String> = std::iter::once("draw".to_string())
        .chain((0..fit.factors.len()).map(|j| format!("f_{j}")))
        .collect();
    let rows: Vec<Vec<String>> = draws
        .iter()
        .enumerate()
        .map(|(k, d)| std::iter::once(k.to_string()).chain(d.refit_f.iter().map(|v| num(*v))).collect())
        .collect();
    out.csv("bootstrap_factors.csv", &cols, &rows)?;
    Ok(freq_msep(t, &fit, &draws)?)
}

pub fn bootstrap(cfg: &RunConfig, out: &mut Outputs) -> Result<()> {
    let t = load(cfg)?;
    let report = freq_report(cfg, &t, out)?;
    msep_outputs(out, "msep_freq", &report)
}

/// Everything a sampler run needs besides the seed.
struct SamplerSetup {
    priors: PriorSpec,
    proposal: ProposalConfig,
    dist: DistanceConfig,
    settings: SamplerSettings,
    fit: ClassicalFit,
}

fn sampler_setup(cfg: &RunConfig, t: &ClaimsTriangle) -> Result<SamplerSetup> {
    let fit = ClassicalFit::estimate(t)?;
    let dim = t.last();
    let priors = match cfg.prior {
        PriorKind::Centred => PriorSpec::centred_on(&fit)?,
        PriorKind::Uniform => PriorSpec::with_precision(dim, cfg.f_shape, cfg.f_scale, cfg.prec_shape, cfg.prec_scale)?,
    };
    let proposal = match cfg.proposal {
        ProposalKind::Adaptive => ProposalConfig::uniform(dim, cfg.gamma_init, cfg.gamma_min)?,
        ProposalKind::Scaled => ProposalConfig::scaled_to(t, &fit)?,
    };
    let moments = match cfg.moments {
        MomentMode::Parametric => MomentCovariance::parametric(t.residual_count()),
        MomentMode::Numerical => {
            let r = compute_residuals(t, &fit.params()?)?;
            MomentCovariance::numerical(&r, cfg.moment_draws, &mut stream_rng(cfg.seed, u64::MAX))?
        }
    };
    let dist = DistanceConfig::with_variances(t, &fit.variances, cfg.metric, moments)?;
    let mut settings = SamplerSettings::new(cfg.iterations, cfg.burn_in);
    settings.synthetic_per_eval = cfg.synthetic_per_eval;
    settings.stuck_warn = cfg.stuck_warn;
    settings.stuck_abort = cfg.stuck_abort;
    if cfg.init == InitKind::Classical {
        settings.init = ChainInit::Fixed(fit.params()?);
    }
    Ok(SamplerSetup {
        priors,
        proposal,
        dist,
        settings,
        fit,
    })
}

#[derive(Serialize)]
struct ChainSummary {
    seed: u64,
    mmse: DfclParams,
    mmse_sigma2: Vec<f64>,
    map: DfclParams,
    acceptance: Vec<f64>,
    final_gamma: Vec<f64>,
    warnings: Vec<String>,
}

pub fn abc(cfg: &RunConfig, out: &mut Outputs) -> Result<()> {
    let t = load(cfg)?;
    let s = sampler_setup(cfg, &t)?;
    let sched = ToleranceSchedule::new(cfg.anchor, cfg.slope, cfg.eps_min)?;
    let seeds = cfg.chain_seeds();
    let chains = run_chains(&t, &s.priors, &s.proposal, &s.dist, &sched, &s.settings, &seeds)?;
    let width = 2 * t.last();

    let mut summaries = vec![];
    for chain in &chains {
        out.with_writer(&format!("chain_{}.csv", chain.seed), |w| chain.write_csv(w))?;
        let mut cols = header(&["iteration"]);
        cols.extend((0..width).map(|k| format!("acc_{k}")));
        cols.extend((0..width).map(|k| format!("gamma_{k}")));
        let rows: Vec<Vec<String>> = chain
            .windows
            .iter()
            .map(|w| {
                std::iter::once(w.iteration.to_string())
                    .chain(w.acceptance.iter().chain(&w.gamma).map(|v| num(*v)))
                    .collect()
            })
            .collect();
        out.csv(&format!("adaptation_{}.csv", chain.seed), &cols, &rows)?;
        let est = point_estimates(chain)?;
        summaries.push(ChainSummary {
            seed: chain.seed,
            mmse: est.mmse,
            mmse_sigma2: est.mmse_sigma2,
            map: est.map,
            acceptance: (0..width).map(|k| chain.acceptance_rate(k)).collect(),
            final_gamma: chain.final_gamma.clone(),
            warnings: chain.warnings.clone(),
        });
    }
    out.json("posterior.json", &summaries)?;

    // reports from the first chain
    let chain = &chains[0];
    msep_outputs(out, "msep_bayes", &bayes_msep(chain, &t)?)?;
    let residuals = compute_residuals(&t, &s.fit.params()?)?;
    let pcfg = PredictiveConfig {
        thin: cfg.thin,
        source: cfg.residual_source,
        seed: cfg.seed,
    };
    let samples = predictive_full(chain, &t, &residuals, &pcfg)?;
    let mut cols = header(&["sample"]);
    cols.extend((0..=t.last()).map(|i| format!("ultimate_{i}")));
    cols.push("total".into());
    let rows: Vec<Vec<String>> = samples
        .iter()
        .enumerate()
        .map(|(k, p)| {
            std::iter::once(k.to_string())
                .chain(p.ultimates.iter().map(|v| num(*v)))
                .chain(std::iter::once(num(p.total)))
                .collect()
        })
        .collect();
    out.csv("predictive.csv", &cols, &rows)?;
    let reports = cfg.var_levels.iter().map(|&l| var_risk(&samples, l)).collect::<dfcl::Result<Vec<_>>>()?;
    let mut rows = vec![];
    for r in &reports {
        for (i, v) in r.per_year.iter().enumerate() {
            rows.push(vec![num(r.level), i.to_string(), num(*v)]);
        }
        rows.push(vec![num(r.level), "total".into(), num(r.total)]);
    }
    out.csv("var.csv", &header(&["level", "accident_year", "var"]), &rows)?;
    out.json("var.json", &reports)
}

pub fn diagnose_cmd(cfg: &RunConfig, chains: &[PathBuf], out: &mut Outputs) -> Result<()> {
    let chains = read_chains(chains, cfg.burn_in)?;
    let dim = chains[0].dim();
    if chains.iter().any(|c| c.dim() != dim || c.len() != chains[0].len()) {
        bail!("chain dumps differ in dimension or length");
    }
    // coordinates that never moved in some chain have no defined diagnostics
    let all_names = coordinate_names(dim);
    let moving = |k: usize| chains.iter().all(|c| c.trace(k).windows(2).any(|w| w[0] != w[1]));
    let (kept, constant): (Vec<usize>, Vec<usize>) = (0..2 * dim).partition(|&k| moving(k));
    if kept.is_empty() {
        bail!("every coordinate is constant after burn-in; nothing to diagnose");
    }
    let names: Vec<String> = kept.iter().map(|&k| all_names[k].clone()).collect();
    let traces: Vec<Vec<Vec<f64>>> = chains.iter().map(|c| kept.iter().map(|&k| c.trace(k)).collect()).collect();
    let len = traces[0][0].len();
    let mut dcfg = DiagnosticConfig::with_grids(len, cfg.grid_points);
    dcfg.max_lag = cfg.max_lag.min(len.saturating_sub(1));
    dcfg.geweke = GewekeConfig {
        first: cfg.geweke_first,
        last: cfg.geweke_last,
        form: cfg.geweke_form,
    };
    dcfg.gelman_form = cfg.gelman_form;
    let report = diagnose(&names, &traces, &dcfg)?;

    let mut cols = header(&["lag"]);
    cols.extend(names.iter().cloned());
    let rows: Vec<Vec<String>> = (0..=dcfg.max_lag)
        .map(|lag| std::iter::once(lag.to_string()).chain(report.parameters.iter().map(|p| num(p.acf[lag]))).collect())
        .collect();
    out.csv("acf.csv", &cols, &rows)?;

    let long = |pick: Pick| -> Vec<Vec<String>> {
        report
            .parameters
            .iter()
            .flat_map(|p| {
                pick(p)
                    .iter()
                    .map(|(n, v)| vec![p.name.clone(), n.to_string(), v.map(num).unwrap_or_default()])
            })
            .collect()
    };
    out.csv("geweke.csv", &header(&["parameter", "length", "z"]), &long(|p| &p.geweke))?;
    if chains.len() > 1 {
        out.csv("gelman_rubin.csv", &header(&["parameter", "length", "sqrt_r"]), &long(|p| &p.gelman_rubin))?;
    }

    let psd: Vec<Vec<f64>> = traces[0].iter().map(|x| welch_psd(x)).collect::<dfcl::Result<_>>()?;
    let rows: Vec<Vec<String>> = (0..psd[0].len())
        .map(|k| std::iter::once(k.to_string()).chain(psd.iter().map(|p| num(p[k]))).collect())
        .collect();
    let mut cols = header(&["frequency_index"]);
    cols.extend(names.iter().cloned());
    out.csv("psd.csv", &cols, &rows)?;
    #[derive(Serialize)]
    struct Diagnostics {
        constant: Vec<String>,
        #[serde(flatten)]
        report: dfcl::diagnostics::DiagnosticReport,
    }
    let constant = constant.iter().map(|&k| all_names[k].clone()).collect();
    out.json("diagnostics.json", &Diagnostics { constant, report })
}

#[derive(Serialize)]
struct StudyReport {
    coordinate: usize,
    rows: Vec<dfcl::study::ToleranceSummary>,
    deltas: Vec<f64>,
}

pub fn tolerance(cfg: &RunConfig, out: &mut Outputs) -> Result<()> {
    let t = load(cfg)?;
    let s = sampler_setup(cfg, &t)?;
    let rows = tolerance_study(
        &t,
        &s.priors,
        &s.proposal,
        &s.dist,
        cfg.anchor,
        cfg.slope,
        &s.settings,
        &cfg.eps_list,
        cfg.study_coordinate,
        cfg.seed,
    )?;
    let opt = |v: Option<f64>| v.map(num).unwrap_or_default();
    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|r| vec![num(r.eps), opt(r.mean), opt(r.sd), opt(r.acceptance), r.error.clone().unwrap_or_default()])
        .collect();
    out.csv("tolerance_study.csv", &header(&["eps", "mean", "sd", "acceptance", "error"]), &table)?;
    let means: Vec<f64> = rows.iter().filter_map(|r| r.mean).collect();
    let deltas = if means.len() == rows.len() { successive_deltas(&means) } else { vec![] };
    out.json(
        "tolerance_study.json",
        &StudyReport {
            coordinate: cfg.study_coordinate,
            rows,
            deltas,
        },
    )
}

pub fn generate_cmd(cfg: &RunConfig, out: &mut Outputs) -> Result<()> {
    let n = cfg.gen_periods;
    let spec = GeneratorSpec {
        params: DfclParams::new(vec![cfg.gen_f; n], vec![cfg.gen_sigma; n])?,
        first_column: FirstColumn::Uniform {
            lo: cfg.first_lo,
            hi: cfg.first_hi,
        },
        residual: cfg.residual_law,
        seed: cfg.seed,
    };
    let t = generate(&spec)?;
    out.with_writer("triangle.csv", |w| t.write_csv(w))?;
    out.json("generator.json", &spec)
}

pub fn reserves(cfg: &RunConfig, chains: &[PathBuf], out: &mut Outputs) -> Result<()> {
    let t = load(cfg)?;
    let fit = ClassicalFit::estimate(&t)?;
    let pred = predict(&t, &fit.factors)?;
    let mut extra = vec![];
    if !chains.is_empty() {
        let chain = &read_chains(chains, cfg.burn_in)?[0];
        if chain.dim() != t.last() {
            bail!("chain has {} factors, triangle needs {}", chain.dim(), t.last());
        }
        let est = point_estimates(chain)?;
        extra.push(("mmse_reserve", predict(&t, &est.mmse.f)?.reserves));
        extra.push(("map_reserve", predict(&t, &est.map.f)?.reserves));
    }
    reserves_table(out, &t, &pred.ultimates, &pred.reserves, &extra)?;
    #[derive(Serialize)]
    struct Totals {
        cl: f64,
        mmse: Option<f64>,
        map: Option<f64>,
    }
    let total = |k: usize| extra.get(k).map(|(_, v)| v.iter().sum());
    out.json(
        "reserves.json",
        &Totals {
            cl: pred.total_reserve,
            mmse: total(0),
            map: total(1),
        },
    )
}

pub fn msep(cfg: &RunConfig, chains: &[PathBuf], out: &mut Outputs) -> Result<()> {
    let t = load(cfg)?;
    let want = |r: RouteSel| cfg.route == r || cfg.route == RouteSel::All;
    if cfg.route == RouteSel::Classical {
        bail!("route=classical has no MSEP; choose bootstrap, credibility, abc or all");
    }
    if want(RouteSel::Credibility) {
        let fit = ClassicalFit::estimate(&t)?;
        msep_outputs(out, "msep_cred", &cred_msep(&t, &fit.factors, &fit.variances)?)?;
    }
    if want(RouteSel::Bootstrap) {
        let report = freq_report(cfg, &t, out)?;
        msep_outputs(out, "msep_freq", &report)?;
    }
    if want(RouteSel::Abc) {
        let chain = &read_chains(chains, cfg.burn_in)?[0];
        msep_outputs(out, "msep_bayes", &bayes_msep(chain, &t)?)?;
    }
    Ok(())
}

pub fn out_dir(cfg: &RunConfig) -> &Path {
    &cfg.out
}
