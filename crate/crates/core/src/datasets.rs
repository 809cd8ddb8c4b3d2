//! Bundled example triangles.

use crate::error::Result;
use crate::triangle::{ClaimsTriangle, Layout};

const REAL_INCREMENTAL: &str = include_str!("../data/incremental_real.csv");
const SYNTHETIC_CUMULATIVE: &str = include_str!("../data/synthetic_cumulative.csv");

/// 10x10 incremental claims from a real portfolio, cumulated after
/// multiplying by `scale`.
pub fn real(scale: f64) -> Result<ClaimsTriangle> {
    ClaimsTriangle::read(REAL_INCREMENTAL.as_bytes(), Layout::Incremental, scale, false)
}

/// 10x10 cumulative triangle generated with every `f_j = 1.2`.
pub fn synthetic() -> Result<ClaimsTriangle> {
    ClaimsTriangle::read(SYNTHETIC_CUMULATIVE.as_bytes(), Layout::Cumulative, 1.0, false)
}
