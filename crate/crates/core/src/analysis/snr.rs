use crate::count_engine::CountTrace;
use crate::error::check_positive;
use crate::{Error, Result};

use super::stats::mean_std;

/// Block length used when averaging counts (s).
pub const DEFAULT_BLOCK: f64 = 1.0;
/// Number of blocks the spread of `C_1` is computed over.
pub const DEFAULT_N_BLOCKS: usize = 20;

/// Which spread divides the level separation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NoiseReference {
    /// `sigma(C_1)` alone.
    #[default]
    Level1,
    /// `sigma(C_1)` and `sigma(C_0)` in quadrature, the noise on the
    /// difference `C_1 - C_0`.
    Quadrature,
}

/// Block-averaged SNR of two communication levels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnrEstimate {
    pub value: f64,
    /// Mean counts per block for each level.
    pub c1_mean: f64,
    pub c0_mean: f64,
    /// Spread of the `C_1` block counts.
    pub sigma_c1: f64,
    /// Spread of the `C_0` block counts.
    pub sigma_c0: f64,
    pub n_blocks: usize,
    /// Error bar on `value` from the block spreads of `C_1` and `C_0`,
    /// neglecting the error on the denominator.
    pub uncertainty: f64,
}

fn block_counts(trace: &CountTrace, block: f64, n_blocks: usize) -> Result<Vec<f64>> {
    let per_block = block / trace.bin_duration;
    let bins_per_block = per_block.round() as usize;
    if bins_per_block == 0 || (per_block - bins_per_block as f64).abs() > 1e-6 * per_block.max(1.0) {
        return Err(Error::Invalid(format!(
            "block {block} s is not a multiple of the {} s bin",
            trace.bin_duration
        )));
    }
    let needed = bins_per_block * n_blocks;
    if trace.len() < needed {
        return Err(Error::Length(format!(
            "{n_blocks} blocks of {block} s need {needed} bins, trace has {}",
            trace.len()
        )));
    }
    Ok(trace.bins[..needed]
        .chunks_exact(bins_per_block)
        .map(|c| c.iter().sum::<u64>() as f64)
        .collect())
}

/// `(C_1 - C_0) / sigma(C_1)` from the first `n_blocks` blocks of each trace.
pub fn estimate_snr(trace_c1: &CountTrace, trace_c0: &CountTrace, block: f64, n_blocks: usize) -> Result<SnrEstimate> {
    estimate_snr_with(trace_c1, trace_c0, block, n_blocks, NoiseReference::Level1)
}

pub fn estimate_snr_with(
    trace_c1: &CountTrace,
    trace_c0: &CountTrace,
    block: f64,
    n_blocks: usize,
    noise: NoiseReference,
) -> Result<SnrEstimate> {
    check_positive("block", block)?;
    if n_blocks < 2 {
        return Err(Error::Invalid("need at least two blocks".into()));
    }
    let (c1_mean, sigma_c1) = mean_std(&block_counts(trace_c1, block, n_blocks)?);
    let (c0_mean, sigma_c0) = mean_std(&block_counts(trace_c0, block, n_blocks)?);
    let denominator = match noise {
        NoiseReference::Level1 => sigma_c1,
        NoiseReference::Quadrature => sigma_c1.hypot(sigma_c0),
    };
    if denominator == 0.0 {
        return Err(Error::ZeroVariance("level counts have no spread".into()));
    }
    Ok(SnrEstimate {
        value: (c1_mean - c0_mean) / denominator,
        c1_mean,
        c0_mean,
        sigma_c1,
        sigma_c0,
        n_blocks,
        uncertainty: sigma_c1.hypot(sigma_c0) / denominator,
    })
}
