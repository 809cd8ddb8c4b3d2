//! Small sample-statistics helpers shared across modules.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator for the `stream`-th independent task of a run. Keeping one
/// stream per draw/chain makes parallel output independent of thread count.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Mean taken relative to the first element, which keeps constant samples
/// exact and reduces cancellation for large offsets.
pub fn mean(xs: &[f64]) -> f64 {
    let x0 = xs[0];
    x0 + xs.iter().map(|x| x - x0).sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance (divisor `n-1`).
pub fn sample_variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

/// Population variance (divisor `n`).
pub fn population_variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64
}

pub fn sample_covariance(xs: &[f64], ys: &[f64]) -> f64 {
    let (mx, my) = (mean(xs), mean(ys));
    xs.iter()
        .zip(ys)
        .map(|(x, y)| (x - mx) * (y - my))
        .sum::<f64>()
        / (xs.len() as f64 - 1.0)
}

/// Linear-interpolation quantile of already sorted data (type 7).
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn sorted(xs: &[f64]) -> Vec<f64> {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Monte Carlo standard error of a mean via non-overlapping batch means.
pub fn batch_means_se(xs: &[f64], batches: usize) -> f64 {
    let len = xs.len() / batches;
    let means: Vec<f64> = xs.chunks_exact(len).take(batches).map(mean).collect();
    (sample_variance(&means) / batches as f64).sqrt()
}
