//! Convergence diagnostics for chain traces: autocorrelation, Geweke's
//! window-mean test with a Welch spectral estimate, and Gelman-Rubin.

use rustfft::{num_complex::Complex, FftPlanner};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::stats::{mean, population_variance, sample_covariance, sample_variance};

/// Number of non-overlapping Welch blocks.
pub const WELCH_BLOCKS: usize = 20;

/// Autocorrelation at lags `0..=max_lag`, each lag's mean cross-product
/// divided by the variance so lag 0 is exactly 1.
pub fn acf(x: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    if x.len() <= max_lag {
        return Err(Error::TooShort {
            needed: max_lag + 1,
            got: x.len(),
        });
    }
    let m = mean(x);
    let var = population_variance(x);
    if !(var > 0.0) {
        return Err(Error::ConstantSequence);
    }
    let d: Vec<f64> = x.iter().map(|v| v - m).collect();
    Ok((0..=max_lag)
        .map(|lag| {
            let n = d.len() - lag;
            let s: f64 = d[..n].iter().zip(&d[lag..]).map(|(a, b)| a * b).sum();
            s / (n as f64 * var)
        })
        .collect())
}

fn hann(n: usize) -> Vec<f64> {
    // the symmetric window vanishes entirely for n <= 2
    if n <= 2 {
        return vec![1.0; n];
    }
    (0..n)
        .map(|t| 0.5 * (1.0 - (2.0 * std::f64::consts::PI * t as f64 / (n - 1) as f64).cos()))
        .collect()
}

fn welch_blocks(x: &[f64]) -> Result<(usize, Vec<f64>, Vec<f64>)> {
    if x.len() < WELCH_BLOCKS {
        return Err(Error::TooShort {
            needed: WELCH_BLOCKS,
            got: x.len(),
        });
    }
    let n = x.len() / WELCH_BLOCKS;
    let m = mean(x);
    let centred = x[..n * WELCH_BLOCKS].iter().map(|v| v - m).collect();
    Ok((n, hann(n), centred))
}

/// Welch power spectral density over the `N` block frequencies. Each block
/// periodogram is divided by the window's sum of squares, so white noise
/// of variance `v` has a flat spectrum at about `v`.
pub fn welch_psd(x: &[f64]) -> Result<Vec<f64>> {
    let (n, w, centred) = welch_blocks(x)?;
    let power: f64 = w.iter().map(|v| v * v).sum();
    let fft = FftPlanner::<f64>::new().plan_fft_forward(n);
    let mut psd = vec![0.0; n];
    let mut buf = vec![Complex::new(0.0, 0.0); n];
    for block in centred.chunks_exact(n) {
        for ((b, v), wt) in buf.iter_mut().zip(block).zip(&w) {
            *b = Complex::new(v * wt, 0.0);
        }
        fft.process(&mut buf);
        for (p, c) in psd.iter_mut().zip(&buf) {
            *p += c.norm_sqr() / power;
        }
    }
    psd.iter_mut().for_each(|p| *p /= WELCH_BLOCKS as f64);
    Ok(psd)
}

/// Zero-frequency value of [`welch_psd`] without the full transform.
pub fn welch_psd_at_zero(x: &[f64]) -> Result<f64> {
    let (n, w, centred) = welch_blocks(x)?;
    let power: f64 = w.iter().map(|v| v * v).sum();
    let total: f64 = centred
        .chunks_exact(n)
        .map(|block| {
            let s: f64 = block.iter().zip(&w).map(|(v, wt)| v * wt).sum();
            s * s / power
        })
        .sum();
    Ok(total / WELCH_BLOCKS as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum StatisticForm {
    /// Conventional form.
    Standard,
    /// Transcribed form: no square root in the Geweke denominator,
    /// five-chain constants in the Gelman-Rubin variance.
    Literal,
}

impl std::str::FromStr for StatisticForm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "standard" => Ok(Self::Standard),
            "literal" => Ok(Self::Literal),
            other => Err(Error::InvalidParameter(format!("unknown statistic form {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GewekeConfig {
    pub first: f64,
    pub last: f64,
    pub form: StatisticForm,
}

impl Default for GewekeConfig {
    fn default() -> Self {
        Self {
            first: 0.1,
            last: 0.5,
            form: StatisticForm::Standard,
        }
    }
}

/// Difference of the means of the first and last windows of `x`, scaled
/// by their spectral variance estimates.
pub fn geweke_z(x: &[f64], cfg: &GewekeConfig) -> Result<f64> {
    if !(cfg.first > 0.0 && cfg.last > 0.0 && cfg.first + cfg.last < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "window fractions {} and {} must be positive with sum below 1",
            cfg.first, cfg.last
        )));
    }
    let len = x.len();
    let n1 = (cfg.first * len as f64).floor() as usize;
    let n2 = (cfg.last * len as f64).floor() as usize;
    if n1.min(n2) < WELCH_BLOCKS {
        return Err(Error::TooShort {
            needed: (WELCH_BLOCKS as f64 / cfg.first.min(cfg.last)).ceil() as usize,
            got: len,
        });
    }
    let a = &x[..n1];
    let b = &x[len - n2..];
    let diff = mean(a) - mean(b);
    let var = welch_psd_at_zero(a)? / n1 as f64 + welch_psd_at_zero(b)? / n2 as f64;
    if var == 0.0 {
        return if diff == 0.0 { Err(Error::ConstantSequence) } else { Ok(diff.signum() * f64::INFINITY) };
    }
    Ok(match cfg.form {
        StatisticForm::Standard => diff / var.sqrt(),
        StatisticForm::Literal => diff / var,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GelmanRubin {
    pub sqrt_r: f64,
    pub between: f64,
    pub within: f64,
    pub pooled_variance: f64,
    pub df: f64,
}

/// Potential scale reduction with the Student-t degrees-of-freedom
/// correction, from `m >= 2` chains of equal length.
pub fn gelman_rubin(chains: &[&[f64]], form: StatisticForm) -> Result<GelmanRubin> {
    let m = chains.len();
    if m < 2 {
        return Err(Error::TooShort { needed: 2, got: m });
    }
    let n = chains[0].len();
    if chains.iter().any(|c| c.len() != n) {
        return Err(Error::ShapeMismatch("chains differ in length".into()));
    }
    if n < 2 {
        return Err(Error::TooShort { needed: 2, got: n });
    }
    if form == StatisticForm::Literal && m != 5 {
        return Err(Error::InvalidParameter(format!("literal form is defined for 5 chains, got {m}")));
    }
    let (mf, nf) = (m as f64, n as f64);
    let means: Vec<f64> = chains.iter().map(|c| mean(c)).collect();
    let vars: Vec<f64> = chains.iter().map(|c| sample_variance(c)).collect();
    let grand = mean(&means);
    let between = nf * sample_variance(&means);
    let within = mean(&vars);
    if !(within > 0.0) {
        return Err(Error::ConstantSequence);
    }
    let sigma2 = (nf - 1.0) / nf * within + between / nf;
    let pooled = sigma2 + between / (mf * nf);

    let shrink = (nf - 1.0) / nf;
    let var_pooled = match form {
        StatisticForm::Standard => {
            let means_sq: Vec<f64> = means.iter().map(|v| v * v).collect();
            shrink * shrink / mf * sample_variance(&vars)
                + ((mf + 1.0) / (mf * nf)).powi(2) * 2.0 / (mf - 1.0) * between * between
                + 2.0 * (mf + 1.0) * (nf - 1.0) / (mf * nf * nf) * (nf / mf)
                    * (sample_covariance(&vars, &means_sq) - 2.0 * grand * sample_covariance(&vars, &means))
        }
        StatisticForm::Literal => {
            let total = 5.0 * nf;
            let cov = sample_covariance(&vars, &means);
            0.2 * shrink * shrink * sample_variance(&vars)
                + (6.0 / (2f64.sqrt() * total)).powi(2) * between * between
                + 12.0 * shrink / 25.0 * cov
                - 24.0 * shrink / 25.0 * grand * cov
        }
    };
    let df = if var_pooled > 0.0 {
        2.0 * pooled * pooled / var_pooled
    } else {
        f64::INFINITY
    };
    // outside df > 2 the t correction is undefined; report the plain ratio
    let ratio = if df.is_finite() && df > 2.0 {
        pooled * df / (within * (df - 2.0))
    } else {
        pooled / within
    };
    Ok(GelmanRubin {
        sqrt_r: ratio.sqrt(),
        between,
        within,
        pooled_variance: pooled,
        df,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticConfig {
    pub max_lag: usize,
    pub geweke: GewekeConfig,
    /// Chain lengths at which the Geweke statistic is evaluated.
    pub geweke_grid: Vec<usize>,
    pub gelman_form: StatisticForm,
    /// Prefix lengths at which Gelman-Rubin is evaluated.
    pub gelman_grid: Vec<usize>,
}

impl DiagnosticConfig {
    /// Evenly spaced grids of `points` lengths up to `len`.
    pub fn with_grids(len: usize, points: usize) -> Self {
        let points = points.max(1);
        let grid: Vec<usize> = (1..=points).map(|k| k * len / points).filter(|&g| g > 0).collect();
        Self {
            max_lag: 50.min(len.saturating_sub(1)),
            geweke: GewekeConfig::default(),
            geweke_grid: grid.clone(),
            gelman_form: StatisticForm::Standard,
            gelman_grid: grid,
        }
    }
}

/// Diagnostics for one named parameter.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParameterDiagnostics {
    pub name: String,
    pub acf: Vec<f64>,
    /// `(length, Z)` per grid point; `None` where the prefix is too short.
    pub geweke: Vec<(usize, Option<f64>)>,
    /// `(length, √R̂)` per grid point, present with two or more chains.
    pub gelman_rubin: Vec<(usize, Option<f64>)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticReport {
    pub config: DiagnosticConfig,
    pub parameters: Vec<ParameterDiagnostics>,
}

/// `chains[c][k]` is the post-burn-in trace of parameter `k` in chain `c`.
/// ACF and Geweke use the first chain.
pub fn diagnose(names: &[String], chains: &[Vec<Vec<f64>>], cfg: &DiagnosticConfig) -> Result<DiagnosticReport> {
    let first = chains.first().ok_or(Error::Empty("chains"))?;
    let parameters = names
        .iter()
        .enumerate()
        .map(|(k, name)| {
            let trace = &first[k];
            let acf = acf(trace, cfg.max_lag)?;
            let geweke = cfg
                .geweke_grid
                .iter()
                .map(|&len| (len, geweke_z(&trace[..len.min(trace.len())], &cfg.geweke).ok()))
                .collect();
            let gelman_rubin = cfg
                .gelman_grid
                .iter()
                .map(|&len| {
                    let prefixes: Vec<&[f64]> = chains.iter().map(|c| &c[k][..len.min(c[k].len())]).collect();
                    let value = (chains.len() >= 2)
                        .then(|| gelman_rubin(&prefixes, cfg.gelman_form).ok().map(|g| g.sqrt_r))
                        .flatten();
                    (len, value)
                })
                .collect();
            Ok(ParameterDiagnostics {
                name: name.clone(),
                acf,
                geweke,
                gelman_rubin,
            })
        })
        .collect::<Result<_>>()?;
    Ok(DiagnosticReport {
        config: cfg.clone(),
        parameters,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::stream_rng;
    use rand::Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn normals(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = stream_rng(seed, 0);
        (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
    }

    #[test]
    fn alternating_sequence_has_lag_one_minus_one() {
        let x: Vec<f64> = (0..1000).map(|t| if t % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let a = acf(&x, 2).unwrap();
        assert_eq!(a[0], 1.0);
        assert!((a[1] + 1.0).abs() < 1e-12);
        assert!((a[2] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn acf_errors() {
        assert!(matches!(acf(&[2.0; 10], 3), Err(Error::ConstantSequence)));
        assert!(matches!(acf(&[1.0, 2.0], 2), Err(Error::TooShort { .. })));
    }

    #[test]
    fn white_noise_acf_inside_band() {
        let x = normals(20_000, 1);
        let band = 3.0 / (x.len() as f64).sqrt();
        let a = acf(&x, 20).unwrap();
        assert!(a[1..].iter().all(|v| v.abs() < band));
    }

    #[test]
    fn ar1_acf_matches_geometric_decay() {
        let e = normals(200_000, 2);
        let mut x = vec![0.0; e.len()];
        for t in 1..e.len() {
            x[t] = 0.5 * x[t - 1] + e[t];
        }
        let a = acf(&x, 6).unwrap();
        for (lag, v) in a.iter().enumerate() {
            assert!((v - 0.5f64.powi(lag as i32)).abs() < 0.02, "lag {lag}: {v}");
        }
    }

    #[test]
    fn psd_of_zero_sequence_is_zero() {
        assert_eq!(welch_psd_at_zero(&[0.0; 400]).unwrap(), 0.0);
        assert!(welch_psd(&[0.0; 19]).is_err());
    }

    #[test]
    fn psd_of_white_noise_is_near_variance() {
        // average over replicates; the zero-frequency estimate per replicate
        // is roughly chi-square with 2*20 degrees of freedom / 40
        let reps: Vec<f64> = (0..200).map(|s| welch_psd_at_zero(&normals(4000, 100 + s)).unwrap()).collect();
        let m = mean(&reps);
        let se = (sample_variance(&reps) / reps.len() as f64).sqrt();
        assert!((m - 1.0).abs() < 3.0 * se + 0.02, "mean {m}, se {se}");
    }

    #[test]
    fn psd_of_block_frequency_sinusoid_is_small_at_zero() {
        let n = 200;
        let x: Vec<f64> = (0..n * WELCH_BLOCKS)
            .map(|t| (2.0 * std::f64::consts::PI * 5.0 * (t % n) as f64 / n as f64).sin())
            .collect();
        let psd = welch_psd(&x).unwrap();
        assert!(welch_psd_at_zero(&x).unwrap() < 1e-3);
        assert!((psd[0] - welch_psd_at_zero(&x).unwrap()).abs() < 1e-9);
        assert!(psd[5] > 10.0);
    }

    #[test]
    fn psd_is_non_negative_everywhere() {
        let psd = welch_psd(&normals(2000, 5)).unwrap();
        assert!(psd.iter().all(|p| *p >= 0.0));
    }

    #[test]
    fn geweke_cases() {
        let cfg = GewekeConfig::default();
        // first 10% and last 50% have equal means
        let mut x = normals(1000, 9);
        let head: f64 = mean(&x[..100]);
        let tail: f64 = mean(&x[500..]);
        x[..100].iter_mut().for_each(|v| *v += tail - head);
        assert!(geweke_z(&x, &cfg).unwrap().abs() < 1e-9);

        let mut shifted = normals(4000, 10);
        shifted[2000..].iter_mut().for_each(|v| *v += 5.0);
        assert!(geweke_z(&shifted, &cfg).unwrap().abs() > 10.0);

        assert!(matches!(geweke_z(&normals(100, 1), &cfg), Err(Error::TooShort { .. })));
        let literal = GewekeConfig {
            form: StatisticForm::Literal,
            ..cfg
        };
        let x = normals(4000, 3);
        let z = geweke_z(&x, &cfg).unwrap();
        let zl = geweke_z(&x, &literal).unwrap();
        // z = d / s and z_literal = d / s², so z² / z_literal = d
        let d = mean(&x[..400]) - mean(&x[2000..]);
        assert!((z * z / zl - d).abs() < 1e-12 * d.abs().max(1.0));
    }

    #[test]
    fn gelman_rubin_cases() {
        let chains: Vec<Vec<f64>> = (0..5).map(|s| normals(5000, 20 + s)).collect();
        let refs: Vec<&[f64]> = chains.iter().map(|c| c.as_slice()).collect();
        let g = gelman_rubin(&refs, StatisticForm::Standard).unwrap();
        assert!((g.sqrt_r - 1.0).abs() < 0.01, "{g:?}");
        let gl = gelman_rubin(&refs, StatisticForm::Literal).unwrap();
        assert!((gl.sqrt_r - 1.0).abs() < 0.01, "{gl:?}");

        let mut apart = chains[..2].to_vec();
        apart[1].iter_mut().for_each(|v| *v += 10.0);
        let refs: Vec<&[f64]> = apart.iter().map(|c| c.as_slice()).collect();
        assert!(gelman_rubin(&refs, StatisticForm::Standard).unwrap().sqrt_r > 3.0);
        assert!(gelman_rubin(&refs, StatisticForm::Literal).is_err());

        let flat = [vec![1.0; 10], vec![1.0; 10]];
        let refs: Vec<&[f64]> = flat.iter().map(|c| c.as_slice()).collect();
        assert!(matches!(gelman_rubin(&refs, StatisticForm::Standard), Err(Error::ConstantSequence)));
    }

    #[test]
    fn gelman_rubin_grows_with_separation() {
        let base: Vec<Vec<f64>> = (0..4).map(|s| normals(2000, 40 + s)).collect();
        let mut last = 0.0;
        for shift in [0.0, 0.2, 0.5, 1.0, 2.0] {
            let mut c = base.clone();
            c[0].iter_mut().for_each(|v| *v += shift);
            let refs: Vec<&[f64]> = c.iter().map(|c| c.as_slice()).collect();
            let r = gelman_rubin(&refs, StatisticForm::Standard).unwrap().sqrt_r;
            assert!(r > last);
            last = r;
        }
    }

    #[test]
    fn report_grid_lengths() {
        let mut rng = stream_rng(0, 0);
        let chains: Vec<Vec<Vec<f64>>> = (0..3)
            .map(|_| (0..2).map(|_| (0..2000).map(|_| rng.random::<f64>()).collect()).collect())
            .collect();
        let cfg = DiagnosticConfig::with_grids(2000, 4);
        let names = vec!["a".to_string(), "b".to_string()];
        let rep = diagnose(&names, &chains, &cfg).unwrap();
        assert_eq!(rep.parameters.len(), 2);
        assert_eq!(rep.parameters[0].acf[0], 1.0);
        assert_eq!(rep.parameters[0].geweke.len(), 4);
        assert_eq!(rep.parameters[1].gelman_rubin.len(), 4);
        assert!(rep.parameters[0].geweke[3].1.is_some());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn acf_invariant_under_positive_affine_maps(
                x in proptest::collection::vec(-100.0f64..100.0, 50..200),
                a in 0.01f64..100.0,
                b in -1e3f64..1e3,
            ) {
                prop_assume!(population_variance(&x) > 1e-6);
                let y: Vec<f64> = x.iter().map(|v| a * v + b).collect();
                let ax = acf(&x, 5).unwrap();
                let ay = acf(&y, 5).unwrap();
                for (p, q) in ax.iter().zip(&ay) {
                    prop_assert!((p - q).abs() < 1e-6);
                }
            }
        }
    }
}
