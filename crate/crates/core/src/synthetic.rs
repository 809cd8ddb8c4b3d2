//! Synthetic triangles simulated from known parameters.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use serde::Serialize;

use crate::bootstrap::step_positive;
use crate::chainladder::DfclParams;
use crate::error::{Error, Result};
use crate::stats::stream_rng;
use crate::triangle::ClaimsTriangle;

/// Law of the first-column claims `C_{i,0}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum FirstColumn {
    Uniform { lo: f64, hi: f64 },
    Fixed(Vec<f64>),
}

impl Default for FirstColumn {
    fn default() -> Self {
        FirstColumn::Uniform { lo: 130.0, hi: 530.0 }
    }
}

/// Innovation law; both variants have mean 0 and variance 1.
pub trait ResidualLaw {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StandardResidual {
    /// Uniform on `[-√3, √3]`.
    #[default]
    Uniform,
    Normal,
}

impl ResidualLaw for StandardResidual {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            StandardResidual::Uniform => {
                let r = 3f64.sqrt();
                Uniform::new_inclusive(-r, r).unwrap().sample(rng)
            }
            StandardResidual::Normal => StandardNormal.sample(rng),
        }
    }
}

impl std::str::FromStr for StandardResidual {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "uniform" => Ok(Self::Uniform),
            "normal" | "gaussian" => Ok(Self::Normal),
            other => Err(Error::InvalidParameter(format!("unknown residual law {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeneratorSpec {
    pub params: DfclParams,
    pub first_column: FirstColumn,
    pub residual: StandardResidual,
    pub seed: u64,
}

impl GeneratorSpec {
    pub fn new(params: DfclParams, seed: u64) -> Self {
        Self {
            params,
            first_column: FirstColumn::default(),
            residual: StandardResidual::default(),
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        let size = self.params.dim() + 1;
        match &self.first_column {
            FirstColumn::Uniform { lo, hi } if !(*lo > 0.0 && hi >= lo && hi.is_finite()) => Err(
                Error::InvalidParameter(format!("first-column range [{lo}, {hi}] must be positive and ordered")),
            ),
            FirstColumn::Fixed(v) if v.len() != size => Err(Error::ShapeMismatch(format!(
                "{} first-column values for {size} accident years",
                v.len()
            ))),
            FirstColumn::Fixed(v) if v.iter().any(|c| !(*c > 0.0)) => {
                Err(Error::InvalidParameter("first-column values must be positive".into()))
            }
            _ => Ok(()),
        }
    }
}

/// Simulates the observed upper triangle; `I = J = params.dim()`.
pub fn generate(spec: &GeneratorSpec) -> Result<ClaimsTriangle> {
    generate_with(spec, &spec.residual)
}

/// As [`generate`] with a caller-supplied innovation law.
pub fn generate_with<L: ResidualLaw>(spec: &GeneratorSpec, law: &L) -> Result<ClaimsTriangle> {
    spec.validate()?;
    let p = &spec.params;
    let size = p.dim() + 1;
    let mut rng = stream_rng(spec.seed, 0);
    let first: Vec<f64> = match &spec.first_column {
        FirstColumn::Uniform { lo, hi } => {
            let u = Uniform::new_inclusive(*lo, *hi).map_err(|e| Error::InvalidParameter(e.to_string()))?;
            (0..size).map(|_| u.sample(&mut rng)).collect()
        }
        FirstColumn::Fixed(v) => v.clone(),
    };
    let rows = first
        .iter()
        .enumerate()
        .map(|(i, &c0)| {
            let mut row = vec![c0];
            for j in 1..size - i {
                let c = step_positive(row[j - 1], p.f[j - 1], p.sigma[j - 1], |r| law.sample(r), &mut rng, (i, j))?;
                row.push(c);
            }
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    ClaimsTriangle::from_cumulative_rows(rows)
}
