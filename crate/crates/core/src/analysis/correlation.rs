use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::{Error, Result};

use super::stats::{mean_std, quantile_sorted};

/// Smallest number of random matrices accepted for a null distribution.
pub const MIN_TRIALS: usize = 100;

/// Pearson correlation of two equally shaped matrices, flattened.
pub fn correlation(a: &Array2<f64>, b: &Array2<f64>) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::Shape(format!("{:?} vs {:?}", a.dim(), b.dim())));
    }
    if a.len() < 2 {
        return Err(Error::Shape("correlation needs at least two entries".into()));
    }
    pearson(a.iter().copied(), b.iter().copied(), a.len())
}

fn pearson(a: impl Iterator<Item = f64> + Clone, b: impl Iterator<Item = f64> + Clone, n: usize) -> Result<f64> {
    let n = n as f64;
    let ma = a.clone().sum::<f64>() / n;
    let mb = b.clone().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(Error::ZeroVariance("matrix has constant entries".into()));
    }
    Ok((sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0))
}

/// Summary of correlations between a reference and random matrices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NullDistribution {
    pub n_trials: usize,
    pub mean: f64,
    pub std: f64,
    /// 0.5th percentile.
    pub lower: f64,
    /// 99.5th percentile.
    pub upper: f64,
}

impl NullDistribution {
    /// True if `value` lies in the central 99% of the distribution.
    pub fn contains(&self, value: f64) -> bool {
        (self.lower..=self.upper).contains(&value)
    }
}

/// Correlates `reference` against `n_trials` matrices of independent
/// uniform [0, 1] entries. Trial `i` draws from stream `i` of `seed`.
pub fn random_correlation_baseline(reference: &Array2<f64>, n_trials: usize, seed: u64) -> Result<NullDistribution> {
    if n_trials < MIN_TRIALS {
        return Err(Error::Invalid(format!("need at least {MIN_TRIALS} trials, got {n_trials}")));
    }
    if reference.len() < 2 {
        return Err(Error::Shape("reference needs at least two entries".into()));
    }
    let flat: Vec<f64> = reference.iter().copied().collect();
    let mut values = (0..n_trials as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i);
            let random: Vec<f64> = (0..flat.len()).map(|_| rng.random::<f64>()).collect();
            pearson(flat.iter().copied(), random.iter().copied(), flat.len())
        })
        .collect::<Result<Vec<f64>>>()?;
    let (mean, std) = mean_std(&values);
    values.sort_by(f64::total_cmp);
    Ok(NullDistribution {
        n_trials,
        mean,
        std,
        lower: quantile_sorted(&values, 0.005),
        upper: quantile_sorted(&values, 0.995),
    })
}
