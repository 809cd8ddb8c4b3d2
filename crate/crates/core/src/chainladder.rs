//! Classical chain-ladder estimation, completion and process variance.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::triangle::ClaimsTriangle;

/// Development factors and standard deviations of the one-step model,
/// one entry per development period `0..J`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DfclParams {
    pub f: Vec<f64>,
    pub sigma: Vec<f64>,
}

impl DfclParams {
    /// Factors must be positive. A zero `sigma` is accepted so that
    /// noise-free simulations can be expressed, but residuals are undefined
    /// for it.
    pub fn new(f: Vec<f64>, sigma: Vec<f64>) -> Result<Self> {
        if f.len() != sigma.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} factors but {} standard deviations",
                f.len(),
                sigma.len()
            )));
        }
        if let Some(v) = f.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("development factor {v} is not positive")));
        }
        if let Some(v) = sigma.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("standard deviation {v} is negative")));
        }
        Ok(Self { f, sigma })
    }

    pub fn from_variances(f: Vec<f64>, sigma2: &[f64]) -> Result<Self> {
        Self::new(f, sigma2.iter().map(|v| v.sqrt()).collect())
    }

    pub fn dim(&self) -> usize {
        self.f.len()
    }

    pub fn sigma2(&self) -> Vec<f64> {
        self.sigma.iter().map(|s| s * s).collect()
    }

    /// Flat coordinate view `(f_0..f_{J-1}, σ_0..σ_{J-1})`.
    pub fn to_coords(&self) -> Vec<f64> {
        self.f.iter().chain(&self.sigma).copied().collect()
    }

    pub fn from_coords(coords: &[f64]) -> Self {
        let j = coords.len() / 2;
        Self {
            f: coords[..j].to_vec(),
            sigma: coords[j..].to_vec(),
        }
    }
}

/// Variance-scale quantities per accident year plus their aggregate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct YearTerms {
    pub per_year: Vec<f64>,
    pub total: f64,
}

pub fn estimate_cl_factors(t: &ClaimsTriangle) -> Result<Vec<f64>> {
    let last = t.last();
    if last < 1 {
        return Err(Error::Degenerate("need at least two accident years".into()));
    }
    Ok((0..last)
        .map(|j| {
            let rows = last - j;
            t.column_sum(j + 1, rows) / t.column_sum(j, rows)
        })
        .collect())
}

/// Variance estimates for `j < I-1`, i.e. every period except the tail.
pub fn observed_variances(t: &ClaimsTriangle, f: &[f64]) -> Result<Vec<f64>> {
    check_len(t, f)?;
    let last = t.last();
    Ok((0..last.saturating_sub(1))
        .map(|j| {
            let rows = last - j;
            let ss: f64 = (0..rows)
                .map(|i| {
                    let prev = t.get(i, j);
                    let dev = t.get(i, j + 1) / prev - f[j];
                    prev * dev * dev
                })
                .sum();
            ss / (rows - 1) as f64
        })
        .collect())
}

/// Full variance vector, closing the last period with Mack's rule.
pub fn estimate_cl_variances(t: &ClaimsTriangle, f: &[f64]) -> Result<Vec<f64>> {
    check_len(t, f)?;
    let dev = t.last();
    if dev < 3 {
        return Err(Error::TailRuleTooShort(dev));
    }
    let mut s2 = observed_variances(t, f)?;
    s2.push(mack_tail(s2[dev - 2], s2[dev - 3]).ok_or(Error::TailRuleZero(dev - 3))?);
    Ok(s2)
}

/// `min(s_{J-2}^4 / s_{J-3}^2, s_{J-3}^2, s_{J-2}^2)`, undefined when the
/// earlier variance is zero.
pub fn mack_tail(last_observed: f64, before: f64) -> Option<f64> {
    (before != 0.0).then(|| {
        (last_observed * last_observed / before)
            .min(before)
            .min(last_observed)
    })
}

/// Convenience wrapper around the two estimators.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassicalFit {
    pub factors: Vec<f64>,
    pub variances: Vec<f64>,
}

impl ClassicalFit {
    pub fn estimate(t: &ClaimsTriangle) -> Result<Self> {
        let factors = estimate_cl_factors(t)?;
        let variances = estimate_cl_variances(t, &factors)?;
        Ok(Self { factors, variances })
    }

    pub fn params(&self) -> Result<DfclParams> {
        DfclParams::from_variances(self.factors.clone(), &self.variances)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClPrediction {
    /// Full `(I+1) x (J+1)` grid; observed cells copied, future cells predicted.
    pub completed: Vec<Vec<f64>>,
    pub ultimates: Vec<f64>,
    pub reserves: Vec<f64>,
    pub total_reserve: f64,
}

pub fn predict(t: &ClaimsTriangle, f: &[f64]) -> Result<ClPrediction> {
    check_len(t, f)?;
    let size = t.accident_years();
    let completed: Vec<Vec<f64>> = t
        .rows()
        .iter()
        .map(|row| {
            let mut full = row.clone();
            for j in row.len()..size {
                let prev = full[j - 1];
                full.push(prev * f[j - 1]);
            }
            full
        })
        .collect();
    let ultimates: Vec<f64> = completed.iter().map(|r| r[size - 1]).collect();
    let reserves: Vec<f64> = ultimates
        .iter()
        .zip(t.anti_diagonal())
        .map(|(u, c)| u - c)
        .collect();
    let total_reserve = reserves.iter().sum();
    Ok(ClPrediction {
        completed,
        ultimates,
        reserves,
        total_reserve,
    })
}

/// Conditional process variance of the ultimate claim per accident year,
/// with plug-in estimates. Accident years are independent so the total is
/// the plain sum.
pub fn freq_process_variance(t: &ClaimsTriangle, f: &[f64], sigma2: &[f64]) -> Result<YearTerms> {
    check_len(t, sigma2)?;
    let pred = predict(t, f)?;
    let last = t.last();
    let per_year: Vec<f64> = (0..=last)
        .map(|i| {
            let row = &pred.completed[i];
            let ult = row[last];
            let sum: f64 = (last - i..last)
                .map(|j| sigma2[j] / (f[j] * f[j]) / row[j])
                .sum();
            ult * ult * sum
        })
        .collect();
    let total = per_year.iter().sum();
    Ok(YearTerms { per_year, total })
}

fn check_len(t: &ClaimsTriangle, v: &[f64]) -> Result<()> {
    if v.len() != t.last() {
        return Err(Error::ShapeMismatch(format!(
            "parameter vector has length {}, triangle needs {}",
            v.len(),
            t.last()
        )));
    }
    Ok(())
}
