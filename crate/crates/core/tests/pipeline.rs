use dfcl::abc::{DistanceConfig, Metric, ToleranceSchedule};
use dfcl::bootstrap::{compute_residuals, run_bootstrap, ResampleMode};
use dfcl::chainladder::{ClassicalFit, DfclParams};
use dfcl::inference::{bayes_msep, freq_msep, point_estimates, predictive_full, var_risk, PredictiveConfig};
use dfcl::mcmc::{mcmc_abc_run, run_chains, ChainInit, PosteriorChain, PriorSpec, ProposalConfig, SamplerSettings};
use dfcl::synthetic::{generate, GeneratorSpec};
use dfcl::diagnostics::{diagnose, DiagnosticConfig};

fn generated() -> dfcl::ClaimsTriangle {
    let params = DfclParams::new(vec![1.2; 6], vec![1.0; 6]).unwrap();
    generate(&GeneratorSpec::new(params, 7)).unwrap()
}

fn short_chain_setup(t: &dfcl::ClaimsTriangle) -> (PriorSpec, ProposalConfig, DistanceConfig, ToleranceSchedule, SamplerSettings) {
    let fit = ClassicalFit::estimate(t).unwrap();
    let priors = PriorSpec::centred_on(&fit).unwrap();
    let proposal = ProposalConfig::scaled_to(t, &fit).unwrap();
    let dist = DistanceConfig::classical(t, Metric::ScaledEuclidean).unwrap();
    let sched = ToleranceSchedule::constant(60.0).unwrap();
    let mut settings = SamplerSettings::new(3_000, 500);
    settings.init = ChainInit::Fixed(fit.params().unwrap());
    (priors, proposal, dist, sched, settings)
}

#[test]
fn generate_fit_bootstrap_sample_report() {
    let t = generated();
    let fit = ClassicalFit::estimate(&t).unwrap();
    let p = fit.params().unwrap();
    let r = compute_residuals(&t, &p).unwrap();
    let draws = run_bootstrap(&t, &p, &r, ResampleMode::Conditional, 200, 3).unwrap();
    let freq = freq_msep(&t, &fit, &draws).unwrap();
    assert!(freq.total.msep > freq.total.process_variance);

    let (priors, proposal, dist, sched, settings) = short_chain_setup(&t);
    let chain = mcmc_abc_run(&t, &priors, &proposal, &dist, &sched, &settings, 5).unwrap();
    assert_eq!(chain.len(), 3_000);
    let est = point_estimates(&chain).unwrap();
    assert!(est.mmse.f.iter().all(|f| *f > 0.0));

    let bayes = bayes_msep(&chain, &t).unwrap();
    assert_eq!(bayes.rows.len(), 7);
    let samples = predictive_full(&chain, &t, &r, &PredictiveConfig::new(9)).unwrap();
    let var = var_risk(&samples, 0.95).unwrap();
    assert!(var.total > 0.0);
}

#[test]
fn chains_are_reproducible_and_seed_sensitive() {
    let t = generated();
    let (priors, proposal, dist, sched, settings) = short_chain_setup(&t);
    let chains = run_chains(&t, &priors, &proposal, &dist, &sched, &settings, &[1, 1, 2]).unwrap();
    assert_eq!(chains[0], chains[1]);
    assert_ne!(chains[0].trace(0), chains[2].trace(0));
}

#[test]
fn chain_dump_round_trips_and_feeds_diagnostics() {
    let t = generated();
    let (priors, proposal, dist, sched, settings) = short_chain_setup(&t);
    let chain = mcmc_abc_run(&t, &priors, &proposal, &dist, &sched, &settings, 4).unwrap();
    let mut buf = Vec::new();
    chain.write_csv(&mut buf).unwrap();
    let back = PosteriorChain::read_csv(buf.as_slice(), chain.burn_in).unwrap();
    for k in 0..12 {
        assert_eq!(back.trace(k), chain.trace(k));
    }
    let moving: Vec<usize> = (0..12).filter(|&k| back.trace(k).windows(2).any(|w| w[0] != w[1])).collect();
    assert!(!moving.is_empty());
    let names: Vec<String> = moving.iter().map(|k| format!("p{k}")).collect();
    let traces = vec![moving.iter().map(|&k| back.trace(k)).collect::<Vec<_>>()];
    let report = diagnose(&names, &traces, &DiagnosticConfig::with_grids(back.trace(0).len(), 5)).unwrap();
    assert_eq!(report.parameters.len(), moving.len());
}
