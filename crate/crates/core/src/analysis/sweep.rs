use std::fmt::Write as _;

use rayon::prelude::*;

use crate::count_engine::{sample_trace, RateSchedule, StreamLabel};
use crate::error::check_non_negative;
use crate::link_model::{self, ChannelActors, LinkParams};
use crate::{Error, Result};

use super::snr::{estimate_snr_with, NoiseReference};
use super::stats::mean_std;

/// One jamming level of the SNR-versus-jamming experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    /// `N_class / N_quantum`.
    pub ratio: f64,
    /// Eve's SNR measured on the signal mode.
    pub snr_classical: f64,
    pub err_classical: f64,
    /// Alice's SNR measured on the idler.
    pub snr_quantum: f64,
    pub err_quantum: f64,
    pub analytic_classical: f64,
    pub analytic_quantum: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepConfig {
    /// Block the counts are summed over (s).
    pub block: f64,
    pub n_blocks: usize,
    pub bin_duration: f64,
    pub noise: NoiseReference,
}

impl SweepConfig {
    /// One `t_meas` per block and per bin, 20 blocks, quadrature noise so
    /// the estimate tracks the analytic curves.
    pub fn for_link(p: &LinkParams) -> Self {
        Self {
            block: p.t_meas,
            n_blocks: super::snr::DEFAULT_N_BLOCKS,
            bin_duration: p.t_meas,
            noise: NoiseReference::Quadrature,
        }
    }
}

/// SplitMix64 finaliser over a few words; used to give each simulated
/// trace its own seed.
pub fn derive_seed(base: u64, words: &[u64]) -> u64 {
    // the base is mixed on its own first so (b, i + 1) and (b + 1, i) differ
    let mut z = 0u64;
    for &w in std::iter::once(&base).chain(words) {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15).wrapping_add(w);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^= z >> 31;
    }
    z
}

/// `(value, error)` for Eve and for Alice from one trace set.
type PartyEstimates = ((f64, f64), (f64, f64));

pub fn sweep_snr(p: &LinkParams, a: &ChannelActors, ratios: &[f64], seeds: &[u64]) -> Result<Vec<SweepRow>> {
    sweep_snr_with(p, a, ratios, seeds, &SweepConfig::for_link(p))
}

/// Simulates both amplitude levels (`alpha^2 = 0` and `1`) at each jamming
/// ratio, for Eve and for Alice, and estimates their SNRs.
///
/// With several seeds the reported value is the mean over seeds and the
/// error its standard error; with a single seed the error is the block
/// spread of that run.
pub fn sweep_snr_with(
    p: &LinkParams,
    a: &ChannelActors,
    ratios: &[f64],
    seeds: &[u64],
    cfg: &SweepConfig,
) -> Result<Vec<SweepRow>> {
    if seeds.is_empty() {
        return Err(Error::Invalid("sweep needs at least one seed".into()));
    }
    for &r in ratios {
        check_non_negative("ratio", r)?;
    }
    let duration = cfg.block * cfg.n_blocks as f64;
    let jobs: Vec<(usize, u64)> = (0..ratios.len())
        .flat_map(|i| seeds.iter().map(move |&s| (i, s)))
        .collect();

    let estimates = jobs
        .par_iter()
        .map(|&(i, seed)| -> Result<PartyEstimates> {
            let actors = ChannelActors {
                n_class: ratios[i] * p.n_quantum,
                ..*a
            };
            let open = ChannelActors { alpha_sq: 0.0, ..actors };
            let blocked = ChannelActors { alpha_sq: 1.0, ..actors };
            let simulate = |rate: f64, label: StreamLabel, level: u64| {
                let sched = RateSchedule::constant(duration, rate)?;
                sample_trace(&sched, cfg.bin_duration, derive_seed(seed, &[i as u64, level]), label)
            };
            let eve1 = simulate(link_model::eve_rate(p, &open)?, StreamLabel::Eve, 1)?;
            let eve0 = simulate(link_model::eve_rate(p, &blocked)?, StreamLabel::Eve, 0)?;
            let alice1 = simulate(link_model::alice_rate(p, &open)?, StreamLabel::Alice, 1)?;
            let alice0 = simulate(link_model::alice_rate(p, &blocked)?, StreamLabel::Alice, 0)?;
            let eve = estimate_snr_with(&eve1, &eve0, cfg.block, cfg.n_blocks, cfg.noise)?;
            let alice = estimate_snr_with(&alice1, &alice0, cfg.block, cfg.n_blocks, cfg.noise)?;
            Ok(((eve.value, eve.uncertainty), (alice.value, alice.uncertainty)))
        })
        .collect::<Result<Vec<_>>>()?;

    ratios
        .iter()
        .enumerate()
        .map(|(i, &ratio)| {
            let chunk = &estimates[i * seeds.len()..(i + 1) * seeds.len()];
            let summarize = |pick: fn(&PartyEstimates) -> (f64, f64)| {
                let values: Vec<f64> = chunk.iter().map(|e| pick(e).0).collect();
                if values.len() == 1 {
                    pick(&chunk[0])
                } else {
                    let (m, s) = mean_std(&values);
                    (m, s / (values.len() as f64).sqrt())
                }
            };
            let (snr_classical, err_classical) = summarize(|e| e.0);
            let (snr_quantum, err_quantum) = summarize(|e| e.1);
            let actors = ChannelActors {
                n_class: ratio * p.n_quantum,
                alpha_sq: 0.0,
                ..*a
            };
            Ok(SweepRow {
                ratio,
                snr_classical,
                err_classical,
                snr_quantum,
                err_quantum,
                analytic_classical: link_model::snr_eve(p, &actors)?,
                analytic_quantum: link_model::snr_alice_amplitude(p, &actors)?,
            })
        })
        .collect()
}

/// Ratio at which the classical SNR first drops to 1, interpolated
/// linearly in `log10(ratio)`. `None` if the sweep never crosses.
pub fn classical_crossing(rows: &[SweepRow]) -> Option<f64> {
    rows.windows(2).find_map(|w| {
        let (a, b) = (w[0], w[1]);
        if a.snr_classical >= 1.0 && b.snr_classical < 1.0 && a.ratio > 0.0 {
            let (la, lb) = (a.ratio.log10(), b.ratio.log10());
            let f = (a.snr_classical - 1.0) / (a.snr_classical - b.snr_classical);
            Some(10f64.powf(la + f * (lb - la)))
        } else {
            None
        }
    })
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(
        "ratio,snr_classical,err_classical,snr_quantum,err_quantum,analytic_classical,analytic_quantum\n",
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.ratio, r.snr_classical, r.err_classical, r.snr_quantum, r.err_quantum, r.analytic_classical, r.analytic_quantum
        );
    }
    out
}
