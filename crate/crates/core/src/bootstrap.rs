//! Residual bootstrap of the one-step development model.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::chainladder::{DfclParams, YearTerms};
use crate::error::{Error, Result};
use crate::stats::{mean, sample_variance, stream_rng};
use crate::triangle::ClaimsTriangle;

/// Residual redraws allowed per cell before a simulated value that stays
/// non-positive is reported as an error.
pub const MAX_REDRAWS: usize = 100;

/// Standardised one-step deviations with their empirical moments.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualSet {
    pub cells: Vec<(usize, usize)>,
    pub values: Vec<f64>,
    pub mean: f64,
    /// Standard deviation with divisor `n-1`.
    pub std: f64,
}

impl ResidualSet {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.values[rng.random_range(0..self.values.len())]
    }
}

pub fn compute_residuals(t: &ClaimsTriangle, p: &DfclParams) -> Result<ResidualSet> {
    if p.dim() != t.last() {
        return Err(Error::ShapeMismatch(format!(
            "{} parameters for a triangle with {} development periods",
            p.dim(),
            t.last()
        )));
    }
    if let Some(j) = p.sigma.iter().position(|&s| s == 0.0) {
        return Err(Error::InvalidParameter(format!("sigma_{j} is zero; residuals undefined")));
    }
    let cells = t.residual_cells();
    if cells.len() < 2 {
        return Err(Error::Degenerate("need at least two residual cells".into()));
    }
    let values: Vec<f64> = cells
        .iter()
        .map(|&(i, j)| residual(t.get(i, j), t.get(i, j - 1), p.f[j - 1], p.sigma[j - 1]))
        .collect();
    let mean = mean(&values);
    let std = sample_variance(&values).sqrt();
    Ok(ResidualSet {
        cells,
        values,
        mean,
        std,
    })
}

#[inline]
pub(crate) fn residual(c: f64, prev: f64, f: f64, sigma: f64) -> f64 {
    (c - f * prev) / (sigma * prev.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ResampleMode {
    /// Regressors are the observed predecessors.
    Conditional,
    /// Regressors are the previously simulated values.
    Unconditional,
}

impl std::str::FromStr for ResampleMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "conditional" => Ok(Self::Conditional),
            "unconditional" => Ok(Self::Unconditional),
            other => Err(Error::InvalidParameter(format!("unknown bootstrap mode {other:?}"))),
        }
    }
}

/// One simulated value `f*prev + sigma*sqrt(prev)*eps`, redrawing `eps`
/// until the result is positive.
#[inline]
pub(crate) fn step_positive<R: Rng + ?Sized>(
    prev: f64,
    f: f64,
    sigma: f64,
    mut eps: impl FnMut(&mut R) -> f64,
    rng: &mut R,
    cell: (usize, usize),
) -> Result<f64> {
    let mean = f * prev;
    let spread = sigma * prev.sqrt();
    for _ in 0..MAX_REDRAWS {
        let c = mean + spread * eps(rng);
        if c > 0.0 {
            return Ok(c);
        }
    }
    Err(Error::PositivityExhausted {
        i: cell.0,
        j: cell.1,
        attempts: MAX_REDRAWS,
    })
}

/// Simulated observed-region claims; column 0 is copied from `t`.
pub(crate) fn simulate_rows<R: Rng + ?Sized>(
    t: &ClaimsTriangle,
    p: &DfclParams,
    residuals: &[f64],
    mode: ResampleMode,
    rng: &mut R,
) -> Result<Vec<Vec<f64>>> {
    let pick = |rng: &mut R| residuals[rng.random_range(0..residuals.len())];
    t.rows()
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut out = Vec::with_capacity(row.len());
            out.push(row[0]);
            for j in 1..row.len() {
                let prev = match mode {
                    ResampleMode::Conditional => row[j - 1],
                    ResampleMode::Unconditional => out[j - 1],
                };
                out.push(step_positive(prev, p.f[j - 1], p.sigma[j - 1], pick, rng, (i, j))?);
            }
            Ok(out)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BootstrapDraw {
    pub triangle: ClaimsTriangle,
    pub refit_f: Vec<f64>,
    /// Refit variances for `j < J-1`; the tail is not re-estimated.
    pub refit_sigma2: Vec<f64>,
    pub source: DfclParams,
}

pub fn resample_conditional<R: Rng + ?Sized>(
    t: &ClaimsTriangle,
    p: &DfclParams,
    r: &ResidualSet,
    rng: &mut R,
) -> Result<BootstrapDraw> {
    resample(t, p, r, ResampleMode::Conditional, rng)
}

pub fn resample_unconditional<R: Rng + ?Sized>(
    t: &ClaimsTriangle,
    p: &DfclParams,
    r: &ResidualSet,
    rng: &mut R,
) -> Result<BootstrapDraw> {
    resample(t, p, r, ResampleMode::Unconditional, rng)
}

pub fn resample<R: Rng + ?Sized>(
    t: &ClaimsTriangle,
    p: &DfclParams,
    r: &ResidualSet,
    mode: ResampleMode,
    rng: &mut R,
) -> Result<BootstrapDraw> {
    if r.is_empty() {
        return Err(Error::Empty("residual set"));
    }
    let triangle = ClaimsTriangle::from_cumulative_rows(simulate_rows(t, p, &r.values, mode, rng)?)?;
    // the regressors in both refit formulas are the ones the cells were built from
    let regressors = match mode {
        ResampleMode::Conditional => t,
        ResampleMode::Unconditional => &triangle,
    };
    let (refit_f, refit_sigma2) = refit(regressors, &triangle);
    Ok(BootstrapDraw {
        triangle,
        refit_f,
        refit_sigma2,
        source: p.clone(),
    })
}

/// `f*_j = sum C*_{i,j+1} / sum X_{i,j}` and the matching variance, with
/// `X` the regressor triangle.
fn refit(regressors: &ClaimsTriangle, sim: &ClaimsTriangle) -> (Vec<f64>, Vec<f64>) {
    let last = sim.last();
    let f: Vec<f64> = (0..last)
        .map(|j| {
            let rows = last - j;
            sim.column_sum(j + 1, rows) / regressors.column_sum(j, rows)
        })
        .collect();
    let s2 = (0..last.saturating_sub(1))
        .map(|j| {
            let rows = last - j;
            (0..rows)
                .map(|i| {
                    let x = regressors.get(i, j);
                    let d = sim.get(i, j + 1) / x - f[j];
                    x * d * d
                })
                .sum::<f64>()
                / (rows - 1) as f64
        })
        .collect();
    (f, s2)
}

/// `n_draws` independent draws; draw `k` uses stream `k` of `seed`.
pub fn run_bootstrap(
    t: &ClaimsTriangle,
    p: &DfclParams,
    r: &ResidualSet,
    mode: ResampleMode,
    n_draws: usize,
    seed: u64,
) -> Result<Vec<BootstrapDraw>> {
    (0..n_draws)
        .into_par_iter()
        .map(|k| resample(t, p, r, mode, &mut stream_rng(seed, k as u64)))
        .collect()
}

/// Estimation error `C^2_{i,I-i} Var(prod f*)` per accident year; the total
/// is the variance of the summed predictors so shared factors are covaried.
pub fn freq_param_error(draws: &[BootstrapDraw], t: &ClaimsTriangle) -> Result<YearTerms> {
    if draws.len() < 2 {
        return Err(Error::TooShort {
            needed: 2,
            got: draws.len(),
        });
    }
    let factors: Vec<&[f64]> = draws.iter().map(|d| d.refit_f.as_slice()).collect();
    Ok(product_variance(t, &factors))
}

/// Shared by the bootstrap and posterior routes: sample variance over
/// factor vectors of `C_{i,I-i} prod_{j>=I-i} f_j`.
pub(crate) fn product_variance(t: &ClaimsTriangle, factors: &[&[f64]]) -> YearTerms {
    let last = t.last();
    let diag = t.anti_diagonal();
    let predictors: Vec<Vec<f64>> = factors
        .iter()
        .map(|f| {
            (0..=last)
                .map(|i| diag[i] * f[last - i..].iter().product::<f64>())
                .collect()
        })
        .collect();
    let per_year = (0..=last)
        .map(|i| {
            let xs: Vec<f64> = predictors.iter().map(|p| p[i]).collect();
            sample_variance(&xs)
        })
        .collect();
    let totals: Vec<f64> = predictors.iter().map(|p| p.iter().sum()).collect();
    YearTerms {
        per_year,
        total: sample_variance(&totals),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chainladder::{estimate_cl_factors, observed_variances, ClassicalFit};
    use crate::stats::stream_rng;
    use approx::assert_relative_eq;

    fn constant_ratio() -> ClaimsTriangle {
        ClaimsTriangle::from_cumulative_rows(vec![
            vec![100.0, 200.0, 300.0],
            vec![100.0, 200.0],
            vec![100.0],
        ])
        .unwrap()
    }

    fn uneven() -> ClaimsTriangle {
        ClaimsTriangle::from_cumulative_rows(vec![
            vec![100.0, 150.0, 180.0],
            vec![110.0, 176.0],
            vec![120.0],
        ])
        .unwrap()
    }

    fn uneven_params() -> DfclParams {
        let t = uneven();
        let f = estimate_cl_factors(&t).unwrap();
        let s2 = observed_variances(&t, &f).unwrap();
        DfclParams::from_variances(f, &[s2[0], 0.4]).unwrap()
    }

    #[test]
    fn zero_residuals_on_constant_ratio() {
        let t = constant_ratio();
        let p = DfclParams::new(vec![2.0, 1.5], vec![0.7, 0.3]).unwrap();
        let r = compute_residuals(&t, &p).unwrap();
        assert!(r.values.iter().all(|&e| e == 0.0));
        assert_eq!(r.mean, 0.0);
        assert_eq!(r.std, 0.0);
        for mode in [ResampleMode::Conditional, ResampleMode::Unconditional] {
            let d = resample(&t, &p, &r, mode, &mut stream_rng(3, 0)).unwrap();
            assert_eq!(d.triangle, t);
            assert_eq!(d.refit_f, vec![2.0, 1.5]);
            assert_eq!(d.refit_sigma2, vec![0.0]);
        }
    }

    #[test]
    fn residual_std_matches_direct_loop() {
        let t = uneven();
        let p = uneven_params();
        let r = compute_residuals(&t, &p).unwrap();
        let mut e = Vec::new();
        for (i, j) in [(0, 1), (0, 2), (1, 1)] {
            e.push((t.get(i, j) - p.f[j - 1] * t.get(i, j - 1)) / (p.sigma[j - 1] * t.get(i, j - 1).sqrt()));
        }
        let m = (e[0] + e[1] + e[2]) / 3.0;
        let s = (((e[0] - m).powi(2) + (e[1] - m).powi(2) + (e[2] - m).powi(2)) / 2.0).sqrt();
        assert_relative_eq!(r.mean, m, epsilon = 1e-14);
        assert_relative_eq!(r.std, s, max_relative = 1e-13);
        assert_eq!(r.values, e);
    }

    #[test]
    fn residuals_reject_zero_sigma() {
        let p = DfclParams::new(vec![2.0, 1.5], vec![0.0, 1.0]).unwrap();
        assert!(compute_residuals(&constant_ratio(), &p).is_err());
    }

    #[test]
    fn conditional_refit_uses_observed_denominators() {
        let t = uneven();
        let p = uneven_params();
        let r = compute_residuals(&t, &p).unwrap();
        let d = resample_conditional(&t, &p, &r, &mut stream_rng(11, 0)).unwrap();
        let sim = &d.triangle;
        assert_eq!(sim.get(0, 0), 100.0);
        assert_eq!(sim.get(2, 0), 120.0);
        let f0 = (sim.get(0, 1) + sim.get(1, 1)) / (100.0 + 110.0);
        let f1 = sim.get(0, 2) / 150.0;
        assert_relative_eq!(d.refit_f[0], f0, max_relative = 1e-15);
        assert_relative_eq!(d.refit_f[1], f1, max_relative = 1e-15);
        // each simulated cell sits on its observed predecessor
        for &(i, j) in &t.residual_cells() {
            let e = residual(sim.get(i, j), t.get(i, j - 1), p.f[j - 1], p.sigma[j - 1]);
            assert!(r.values.iter().any(|v| (v - e).abs() < 1e-9), "cell ({i},{j})");
        }
    }

    #[test]
    fn draws_are_seed_deterministic_and_modes_differ() {
        let t = four_by_four();
        let p = ClassicalFit::estimate(&t).unwrap().params().unwrap();
        let r = compute_residuals(&t, &p).unwrap();
        let a = resample_conditional(&t, &p, &r, &mut stream_rng(5, 2)).unwrap();
        let b = resample_conditional(&t, &p, &r, &mut stream_rng(5, 2)).unwrap();
        assert_eq!(a, b);
        let u = resample_unconditional(&t, &p, &r, &mut stream_rng(5, 2)).unwrap();
        assert_ne!(a.triangle, u.triangle);
    }

    #[test]
    fn unconditional_without_noise_is_cl_completion_on_mask() {
        let t = uneven();
        let p = DfclParams::new(vec![1.5, 1.2], vec![0.0, 0.0]).unwrap();
        let r = ResidualSet {
            cells: vec![],
            values: vec![0.7, -1.1],
            mean: 0.0,
            std: 1.0,
        };
        let d = resample_unconditional(&t, &p, &r, &mut stream_rng(0, 0)).unwrap();
        assert_eq!(d.triangle.row(0), &[100.0, 150.0, 180.0]);
        assert_eq!(d.triangle.row(1), &[110.0, 165.0]);
    }

    #[test]
    fn positivity_exhaustion_is_an_error() {
        let t = uneven();
        let p = DfclParams::new(vec![1.0, 1.0], vec![100.0, 100.0]).unwrap();
        let r = ResidualSet {
            cells: vec![],
            values: vec![-5.0],
            mean: -5.0,
            std: 0.0,
        };
        let err = resample_conditional(&t, &p, &r, &mut stream_rng(0, 0)).unwrap_err();
        assert!(matches!(err, Error::PositivityExhausted { i: 0, j: 1, attempts: MAX_REDRAWS }));
    }

    #[test]
    fn param_error_of_hand_draws() {
        // one open year (I=1): products are the single refit factor
        let t = ClaimsTriangle::from_cumulative_rows(vec![vec![50.0, 60.0], vec![100.0]]).unwrap();
        let draws: Vec<BootstrapDraw> = [1.0, 1.1, 1.2]
            .iter()
            .map(|&f| BootstrapDraw {
                triangle: t.clone(),
                refit_f: vec![f],
                refit_sigma2: vec![],
                source: DfclParams::new(vec![1.0], vec![1.0]).unwrap(),
            })
            .collect();
        let pe = freq_param_error(&draws, &t).unwrap();
        assert_eq!(pe.per_year[0], 0.0);
        assert_relative_eq!(pe.per_year[1].sqrt(), 10.0, max_relative = 1e-12);
        assert_relative_eq!(pe.total.sqrt(), 10.0, max_relative = 1e-12);
        assert!(freq_param_error(&draws[..1], &t).is_err());
    }

    #[test]
    fn identical_draws_give_zero_error() {
        let t = constant_ratio();
        let p = DfclParams::new(vec![2.0, 1.5], vec![0.7, 0.3]).unwrap();
        let r = compute_residuals(&t, &p).unwrap();
        let draws = run_bootstrap(&t, &p, &r, ResampleMode::Conditional, 20, 9).unwrap();
        let pe = freq_param_error(&draws, &t).unwrap();
        assert!(pe.per_year.iter().all(|&v| v == 0.0));
        assert_eq!(pe.total, 0.0);
    }

    fn four_by_four() -> ClaimsTriangle {
        ClaimsTriangle::from_cumulative_rows(vec![
            vec![100.0, 150.0, 180.0, 190.0],
            vec![110.0, 176.0, 200.0],
            vec![120.0, 170.0],
            vec![130.0],
        ])
        .unwrap()
    }

    #[test]
    fn parallel_run_matches_sequential_streams() {
        let t = four_by_four();
        let p = ClassicalFit::estimate(&t).unwrap().params().unwrap();
        let r = compute_residuals(&t, &p).unwrap();
        let par = run_bootstrap(&t, &p, &r, ResampleMode::Conditional, 16, 4).unwrap();
        for (k, d) in par.iter().enumerate() {
            let s = resample_conditional(&t, &p, &r, &mut stream_rng(4, k as u64)).unwrap();
            assert_eq!(&s, d);
        }
    }
}
