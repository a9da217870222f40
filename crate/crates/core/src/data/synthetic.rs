//! Synthetic hill/valley sequences.
//!
//! Each row is a flat baseline (random per-row offset) carrying one Gaussian
//! bump: upward for a hill (label 1), downward for a valley (label 0). The
//! bump centre is uniform over the interior 80% of the sequence, so a
//! classifier has to find the feature anywhere along the row.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::Dataset;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::seed;

/// Generator constants.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HillValleyParams {
    /// Bump full width as a fraction of the sequence length; sigma is half of it.
    pub width_fraction: f64,
    pub amplitude: f64,
    /// Baseline offsets are uniform in `[-offset_range, offset_range]`.
    pub offset_range: f64,
    /// Noise sigma as a fraction of the amplitude (noisy variant only).
    pub noise_fraction: f64,
}

impl Default for HillValleyParams {
    fn default() -> Self {
        HillValleyParams {
            width_fraction: 0.10,
            amplitude: 1.0,
            offset_range: 5.0,
            noise_fraction: 0.05,
        }
    }
}

/// `n` rows of length `length`; rows alternate valley (0) / hill (1).
pub fn make_hill_valley(n: usize, length: usize, noisy: bool, seed: u64) -> Result<Dataset> {
    make_hill_valley_with(n, length, noisy, seed, HillValleyParams::default())
}

pub fn make_hill_valley_with(
    n: usize,
    length: usize,
    noisy: bool,
    seed: u64,
    p: HillValleyParams,
) -> Result<Dataset> {
    if length < 8 || n < 2 {
        return Err(Error::InvalidArgument(format!(
            "hill/valley needs n >= 2 and length >= 8 (got n = {n}, length = {length})"
        )));
    }
    let mut rng = seed::rng(seed);
    let sigma = 0.5 * p.width_fraction * length as f64;
    let noise = Normal::new(0.0, p.noise_fraction * p.amplitude).expect("finite sigma");
    let lo = 0.1 * length as f64;
    let hi = 0.9 * length as f64;

    let mut data = Vec::with_capacity(n * length);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let label = i % 2;
        let sign = if label == 1 { 1.0 } else { -1.0 };
        let offset = rng.random_range(-p.offset_range..=p.offset_range);
        let centre = rng.random_range(lo..hi);
        for x in 0..length {
            let z = (x as f64 - centre) / sigma;
            let mut v = offset + sign * p.amplitude * (-0.5 * z * z).exp();
            if noisy {
                v += noise.sample(&mut rng);
            }
            data.push(v);
        }
        labels.push(label);
    }
    let name = if noisy {
        "hill-valley-noisy"
    } else {
        "hill-valley"
    };
    Dataset::from_parts(name, Matrix::new(n, length, data)?, labels, 2)
}
