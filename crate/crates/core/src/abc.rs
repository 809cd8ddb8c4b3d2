//! ABC building blocks: summary vectors, weighted distances, the hard
//! decision and the annealed tolerance.

use rand::Rng;
use serde::Serialize;

use crate::bootstrap::ResidualSet;
use crate::chainladder::ClassicalFit;
use crate::error::{Error, Result};
use crate::stats::{mean, sample_covariance, sample_variance};
use crate::triangle::ClaimsTriangle;

/// Claims with `j >= 1` in row-major order, then a `(mean, std)` pair of
/// residual moments: `(0, 1)` for data, `(μ*, s*)` for a synthetic set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryStats {
    pub claims: Vec<f64>,
    pub moments: [f64; 2],
}

impl SummaryStats {
    pub fn observed(t: &ClaimsTriangle) -> Self {
        summarize(t, [0.0, 1.0])
    }

    pub fn len(&self) -> usize {
        self.claims.len() + 2
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = self.claims.clone();
        v.extend(self.moments);
        v
    }
}

pub fn summarize(t: &ClaimsTriangle, moments: [f64; 2]) -> SummaryStats {
    SummaryStats {
        claims: claims_part(t.rows()),
        moments,
    }
}

pub(crate) fn claims_part(rows: &[Vec<f64>]) -> Vec<f64> {
    rows.iter()
        .flat_map(|r| r.iter().skip(1).copied())
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Metric {
    ScaledEuclidean,
    Mahalanobis,
    Cityblock,
}

impl std::str::FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "scaled-euclidean" | "euclidean" => Ok(Self::ScaledEuclidean),
            "mahalanobis" => Ok(Self::Mahalanobis),
            "cityblock" | "l1" => Ok(Self::Cityblock),
            other => Err(Error::InvalidParameter(format!("unknown metric {other:?}"))),
        }
    }
}

/// Covariance of the synthetic residual moments `(μ̃, s̃)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentCovariance {
    pub var_mean: f64,
    pub var_std: f64,
    pub cov: f64,
}

impl MomentCovariance {
    /// Closed forms for `n` i.i.d. standard normal residuals.
    pub fn parametric(n: usize) -> Self {
        let n = n as f64;
        let d = (n - 1.0) * (n - 1.0);
        Self {
            var_mean: 1.0 / n,
            var_std: 2.0 * n * (1.0 + 5.0 / (n * n)) / d,
            cov: (1.0 - 2.0 / n) / (2.0 * d),
        }
    }

    /// Monte Carlo estimate from resampling the empirical residuals.
    pub fn numerical<R: Rng + ?Sized>(residuals: &ResidualSet, draws: usize, rng: &mut R) -> Result<Self> {
        if draws < 2 {
            return Err(Error::TooShort { needed: 2, got: draws });
        }
        let n = residuals.len();
        let mut means = Vec::with_capacity(draws);
        let mut stds = Vec::with_capacity(draws);
        let mut buf = vec![0.0; n];
        for _ in 0..draws {
            for v in &mut buf {
                *v = residuals.draw(rng);
            }
            means.push(mean(&buf));
            stds.push(sample_variance(&buf).sqrt());
        }
        Ok(Self {
            var_mean: sample_variance(&means),
            var_std: sample_variance(&stds),
            cov: sample_covariance(&means, &stds),
        })
    }

    fn determinant(&self) -> f64 {
        self.var_mean * self.var_std - self.cov * self.cov
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MomentMode {
    Parametric,
    Numerical,
}

impl std::str::FromStr for MomentMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "parametric" => Ok(Self::Parametric),
            "numerical" => Ok(Self::Numerical),
            other => Err(Error::InvalidParameter(format!("unknown moment block mode {other:?}"))),
        }
    }
}

/// Block-diagonal weight matrix: a diagonal over the claims coordinates
/// and a 2x2 block over the moment pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistanceConfig {
    pub metric: Metric,
    pub claim_variances: Vec<f64>,
    pub moments: MomentCovariance,
    #[serde(skip)]
    moment_inverse: [[f64; 2]; 2],
}

impl DistanceConfig {
    pub fn new(metric: Metric, claim_variances: Vec<f64>, moments: MomentCovariance) -> Result<Self> {
        if metric != Metric::Cityblock {
            if let Some(k) = claim_variances.iter().position(|v| !(*v > 0.0)) {
                return Err(Error::SingularWeights(format!("claims coordinate {k} has zero variance")));
            }
            if !(moments.var_mean > 0.0 && moments.var_std > 0.0) {
                return Err(Error::SingularWeights("moment variances must be positive".into()));
            }
            if metric == Metric::Mahalanobis && !(moments.determinant() > 0.0) {
                return Err(Error::SingularWeights("moment block is not positive definite".into()));
            }
        }
        let det = moments.determinant();
        let moment_inverse = [
            [moments.var_std / det, -moments.cov / det],
            [-moments.cov / det, moments.var_mean / det],
        ];
        Ok(Self {
            metric,
            claim_variances,
            moments,
            moment_inverse,
        })
    }

    /// Claims weights `σ²_{j-1} C_{i,j-1}` from the given variances.
    pub fn with_variances(
        t: &ClaimsTriangle,
        sigma2: &[f64],
        metric: Metric,
        moments: MomentCovariance,
    ) -> Result<Self> {
        if sigma2.len() != t.last() {
            return Err(Error::ShapeMismatch(format!(
                "{} variances for {} development periods",
                sigma2.len(),
                t.last()
            )));
        }
        let weights = t
            .residual_cells()
            .into_iter()
            .map(|(i, j)| sigma2[j - 1] * t.get(i, j - 1))
            .collect();
        Self::new(metric, weights, moments)
    }

    /// Weights from the classical estimates of `t` with the parametric
    /// moment block.
    pub fn classical(t: &ClaimsTriangle, metric: Metric) -> Result<Self> {
        let fit = ClassicalFit::estimate(t)?;
        Self::with_variances(t, &fit.variances, metric, MomentCovariance::parametric(t.residual_count()))
    }

    /// Dense `(n+2) x (n+2)` weight matrix, for inspection and export.
    pub fn weight_matrix(&self) -> Vec<Vec<f64>> {
        let n = self.claim_variances.len();
        let mut m = vec![vec![0.0; n + 2]; n + 2];
        for (k, v) in self.claim_variances.iter().enumerate() {
            m[k][k] = *v;
        }
        m[n][n] = self.moments.var_mean;
        m[n + 1][n + 1] = self.moments.var_std;
        m[n][n + 1] = self.moments.cov;
        m[n + 1][n] = self.moments.cov;
        m
    }

    /// Squared-form distance for the weighted metrics, `L1` for cityblock.
    pub fn distance(&self, a: &SummaryStats, b: &SummaryStats) -> Result<f64> {
        if a.claims.len() != b.claims.len() || a.claims.len() != self.claim_variances.len() {
            return Err(Error::ShapeMismatch(format!(
                "summary lengths {} and {} against {} weights",
                a.len(),
                b.len(),
                self.claim_variances.len() + 2
            )));
        }
        Ok(self.distance_unchecked(&a.claims, a.moments, &b.claims, b.moments))
    }

    pub(crate) fn distance_unchecked(&self, a: &[f64], am: [f64; 2], b: &[f64], bm: [f64; 2]) -> f64 {
        let dm = [am[0] - bm[0], am[1] - bm[1]];
        match self.metric {
            Metric::Cityblock => {
                a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() + dm[0].abs() + dm[1].abs()
            }
            Metric::ScaledEuclidean | Metric::Mahalanobis => {
                let claims: f64 = a
                    .iter()
                    .zip(b)
                    .zip(&self.claim_variances)
                    .map(|((x, y), v)| (x - y) * (x - y) / v)
                    .sum();
                let moments = if self.metric == Metric::Mahalanobis {
                    let inv = &self.moment_inverse;
                    dm[0] * (inv[0][0] * dm[0] + inv[0][1] * dm[1])
                        + dm[1] * (inv[1][0] * dm[0] + inv[1][1] * dm[1])
                } else {
                    dm[0] * dm[0] / self.moments.var_mean + dm[1] * dm[1] / self.moments.var_std
                };
                claims + moments
            }
        }
    }
}

/// Free-function form of [`DistanceConfig::distance`].
pub fn distance(a: &SummaryStats, b: &SummaryStats, cfg: &DistanceConfig) -> Result<f64> {
    cfg.distance(a, b)
}

/// Inclusive acceptance: `d <= eps`.
pub fn hard_decision(d: f64, eps: f64) -> bool {
    d <= eps
}

/// `ε_t = max(anchor - slope * t, floor)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ToleranceSchedule {
    pub anchor: f64,
    pub slope: f64,
    pub floor: f64,
}

impl ToleranceSchedule {
    pub const DEFAULT_ANCHOR: f64 = 20_000.0;
    pub const DEFAULT_SLOPE: f64 = 10.0;

    pub fn new(anchor: f64, slope: f64, floor: f64) -> Result<Self> {
        if !(floor > 0.0) {
            return Err(Error::InvalidParameter(format!("tolerance floor must be positive, got {floor}")));
        }
        if !(slope >= 0.0) || anchor.is_nan() {
            return Err(Error::InvalidParameter("schedule slope must be non-negative".into()));
        }
        Ok(Self { anchor, slope, floor })
    }

    pub fn with_floor(floor: f64) -> Result<Self> {
        Self::new(Self::DEFAULT_ANCHOR, Self::DEFAULT_SLOPE, floor)
    }

    /// Fixed tolerance from the first iteration.
    pub fn constant(eps: f64) -> Result<Self> {
        Self::new(eps, 0.0, eps)
    }

    pub fn at(&self, t: usize) -> f64 {
        (self.anchor - self.slope * t as f64).max(self.floor)
    }

    pub fn at_floor(&self, t: usize) -> bool {
        self.at(t) == self.floor
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn toy() -> ClaimsTriangle {
        ClaimsTriangle::from_cumulative_rows(vec![
            vec![100.0, 200.0, 300.0],
            vec![100.0, 200.0],
            vec![100.0],
        ])
        .unwrap()
    }

    fn diag(var_mean: f64, var_std: f64) -> MomentCovariance {
        MomentCovariance {
            var_mean,
            var_std,
            cov: 0.0,
        }
    }

    #[test]
    fn observed_summary_of_toy() {
        let s = SummaryStats::observed(&toy());
        assert_eq!(s.claims, vec![200.0, 300.0, 200.0]);
        assert_eq!(s.moments, [0.0, 1.0]);
        assert_eq!(s.to_vec().len(), 5);
    }

    #[test]
    fn two_vector_case() {
        let a = SummaryStats {
            claims: vec![],
            moments: [1.0, 0.0],
        };
        let b = SummaryStats {
            claims: vec![],
            moments: [0.0, 0.0],
        };
        let m = DistanceConfig::new(Metric::Mahalanobis, vec![], diag(4.0, 1.0)).unwrap();
        assert_relative_eq!(m.distance(&a, &b).unwrap(), 0.25, max_relative = 1e-15);
        let c = DistanceConfig::new(Metric::Cityblock, vec![], diag(4.0, 1.0)).unwrap();
        assert_eq!(c.distance(&a, &b).unwrap(), 1.0);
    }

    #[test]
    fn mahalanobis_equals_scaled_euclidean_without_moment_difference() {
        let cov = MomentCovariance::parametric(3);
        let w = vec![2.0, 3.0, 5.0];
        let a = SummaryStats {
            claims: vec![1.0, 2.0, 3.0],
            moments: [0.1, 0.9],
        };
        let b = SummaryStats {
            claims: vec![0.0, 4.0, 3.5],
            moments: [0.1, 0.9],
        };
        let m = DistanceConfig::new(Metric::Mahalanobis, w.clone(), cov).unwrap();
        let e = DistanceConfig::new(Metric::ScaledEuclidean, w, cov).unwrap();
        assert_eq!(m.distance(&a, &b).unwrap(), e.distance(&a, &b).unwrap());
    }

    #[test]
    fn mahalanobis_moment_block_matches_dense_inverse() {
        let cov = MomentCovariance {
            var_mean: 2.0,
            var_std: 3.0,
            cov: 1.0,
        };
        let cfg = DistanceConfig::new(Metric::Mahalanobis, vec![], cov).unwrap();
        let a = SummaryStats {
            claims: vec![],
            moments: [1.0, 2.0],
        };
        let b = SummaryStats {
            claims: vec![],
            moments: [0.0, 0.0],
        };
        // inverse of [[2,1],[1,3]] is [[3,-1],[-1,2]]/5
        let expect = (3.0 * 1.0 - 2.0 * 1.0 * 2.0 + 2.0 * 4.0) / 5.0;
        assert_relative_eq!(cfg.distance(&a, &b).unwrap(), expect, max_relative = 1e-14);
    }

    #[test]
    fn parametric_block_closed_forms() {
        let c = MomentCovariance::parametric(45);
        assert_relative_eq!(c.var_mean, 1.0 / 45.0);
        assert_relative_eq!(c.var_std, 90.0 * (1.0 + 5.0 / 2025.0) / 1936.0, max_relative = 1e-15);
        assert_relative_eq!(c.cov, (1.0 - 2.0 / 45.0) / 3872.0, max_relative = 1e-15);
    }

    #[test]
    fn weight_matrix_block_structure() {
        let rows = (0..4).map(|i| (0..4 - i).map(|j| 100.0 + 37.0 * (i * 4 + j * j) as f64).collect()).collect();
        let t = ClaimsTriangle::from_cumulative_rows(rows).unwrap();
        let cfg = DistanceConfig::classical(&t, Metric::Mahalanobis).unwrap();
        let m = cfg.weight_matrix();
        let n = t.residual_count();
        assert_eq!(m.len(), n + 2);
        #[allow(clippy::needless_range_loop)]
        for r in 0..n + 2 {
            for c in 0..n + 2 {
                assert_eq!(m[r][c], m[c][r]);
                let moment_block = r >= n && c >= n;
                if r != c && !moment_block {
                    assert_eq!(m[r][c], 0.0);
                }
            }
        }
        let fit = ClassicalFit::estimate(&t).unwrap();
        for (k, &(i, j)) in t.residual_cells().iter().enumerate() {
            assert_eq!(m[k][k], fit.variances[j - 1] * t.get(i, j - 1));
        }
        assert_eq!(cfg.moments, MomentCovariance::parametric(n));
    }

    #[test]
    fn singular_weights_rejected() {
        let e = DistanceConfig::new(Metric::ScaledEuclidean, vec![1.0, 0.0], diag(1.0, 1.0));
        assert!(matches!(e, Err(Error::SingularWeights(_))));
        let bad = MomentCovariance {
            var_mean: 1.0,
            var_std: 1.0,
            cov: 1.0,
        };
        assert!(DistanceConfig::new(Metric::Mahalanobis, vec![1.0], bad).is_err());
        assert!(DistanceConfig::new(Metric::Cityblock, vec![0.0], bad).is_ok());
    }

    #[test]
    fn cityblock_claims_part_doubles_with_triangle() {
        let t = toy();
        let s = SummaryStats::observed(&t);
        let s2 = SummaryStats::observed(&t.scaled(2.0).unwrap());
        let zero = SummaryStats {
            claims: vec![0.0; 3],
            moments: [0.0, 1.0],
        };
        let cfg = DistanceConfig::new(Metric::Cityblock, vec![1.0; 3], diag(1.0, 1.0)).unwrap();
        assert_eq!(cfg.distance(&s2, &zero).unwrap(), 2.0 * cfg.distance(&s, &zero).unwrap());
    }

    #[test]
    fn length_mismatch_is_an_error() {
        let cfg = DistanceConfig::new(Metric::Cityblock, vec![1.0; 3], diag(1.0, 1.0)).unwrap();
        let a = SummaryStats::observed(&toy());
        let b = SummaryStats {
            claims: vec![1.0],
            moments: [0.0, 1.0],
        };
        assert!(matches!(distance(&a, &b, &cfg), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn decision_is_inclusive() {
        assert!(hard_decision(0.0, 0.1));
        assert!(hard_decision(0.1, 0.1));
        assert!(!hard_decision(0.2, 0.1));
        assert!(hard_decision(1e300, f64::INFINITY));
    }

    #[test]
    fn schedule_anneals_to_floor() {
        let s = ToleranceSchedule::with_floor(0.1).unwrap();
        assert_eq!(s.at(0), 20_000.0);
        assert_eq!(s.at(1000), 10_000.0);
        assert_eq!(s.at(2000), 0.1);
        assert!(s.at_floor(5000));
        assert!(!s.at_floor(1999));
        assert!(ToleranceSchedule::with_floor(0.0).is_err());
        let inf = ToleranceSchedule::with_floor(f64::INFINITY).unwrap();
        assert!(inf.at_floor(0));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn vecs() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, Vec<f64>, [f64; 4])> {
            (1usize..20).prop_flat_map(|n| {
                (
                    proptest::collection::vec(-1e3f64..1e3, n),
                    proptest::collection::vec(-1e3f64..1e3, n),
                    proptest::collection::vec(0.01f64..100.0, n),
                    [-3.0f64..3.0, 0.1f64..3.0, -3.0f64..3.0, 0.1f64..3.0],
                )
            })
        }

        proptest! {
            #[test]
            fn symmetric_and_zero_on_diagonal((a, b, w, m) in vecs(), metric in prop_oneof![
                Just(Metric::ScaledEuclidean), Just(Metric::Mahalanobis), Just(Metric::Cityblock)
            ]) {
                let cfg = DistanceConfig::new(metric, w, MomentCovariance::parametric(a.len() + 2)).unwrap();
                let x = SummaryStats { claims: a, moments: [m[0], m[1]] };
                let y = SummaryStats { claims: b, moments: [m[2], m[3]] };
                let dxy = cfg.distance(&x, &y).unwrap();
                prop_assert!(dxy >= 0.0);
                prop_assert_eq!(dxy, cfg.distance(&y, &x).unwrap());
                prop_assert_eq!(cfg.distance(&x, &x).unwrap(), 0.0);
            }

            #[test]
            fn schedule_is_non_increasing(a in 0.0f64..1e5, b in 0.0f64..100.0, floor in 1e-6f64..10.0, t in 0usize..100_000) {
                let s = ToleranceSchedule::new(a, b, floor).unwrap();
                prop_assert!(s.at(t + 1) <= s.at(t));
                prop_assert!(s.at(t) >= floor);
            }
        }
    }
}
