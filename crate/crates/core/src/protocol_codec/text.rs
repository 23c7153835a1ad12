use crate::analysis::stats::mean_std;
use crate::count_engine::CountTrace;
use crate::error::check_positive;
use crate::{Error, Result};

use super::{EncodingKind, SymbolSchedule};

pub const DEFAULT_PREAMBLE_LEN: usize = 8;
/// Fraction of each bit window discarded at both edges before averaging.
pub const DEFAULT_GUARD_FRACTION: f64 = 0.1;

/// Alternating calibration pattern starting with `1`.
pub fn preamble_bits(len: usize) -> Vec<bool> {
    (0..len).map(|i| i % 2 == 0).collect()
}

/// Eight bits per byte, most significant bit first.
pub fn message_bits(message: &[u8]) -> Result<Vec<bool>> {
    if message.is_empty() {
        return Err(Error::Invalid("message is empty".into()));
    }
    Ok(message
        .iter()
        .flat_map(|&byte| (0..8).rev().map(move |i| byte >> i & 1 == 1))
        .collect())
}

/// Packs MSB-first bits into bytes; a trailing partial byte is dropped.
pub fn bits_to_bytes(bits: &[bool]) -> Vec<u8> {
    bits.chunks_exact(8)
        .map(|c| c.iter().fold(0u8, |acc, &b| acc << 1 | b as u8))
        .collect()
}

/// ASCII text behind the default preamble.
pub fn encode_text(message: &str, kind: EncodingKind, bit_duration: f64) -> Result<SymbolSchedule> {
    encode_text_with_preamble(message, kind, bit_duration, DEFAULT_PREAMBLE_LEN)
}

pub fn encode_text_with_preamble(
    message: &str,
    kind: EncodingKind,
    bit_duration: f64,
    preamble_len: usize,
) -> Result<SymbolSchedule> {
    if let Some((pos, c)) = message.char_indices().find(|(_, c)| !c.is_ascii()) {
        return Err(Error::Invalid(format!("non-ASCII character {c:?} at byte {pos}")));
    }
    encode_bytes(message.as_bytes(), kind, bit_duration, preamble_len)
}

/// Arbitrary bytes behind a `preamble_len`-bit alternating preamble.
pub fn encode_bytes(message: &[u8], kind: EncodingKind, bit_duration: f64, preamble_len: usize) -> Result<SymbolSchedule> {
    check_positive("bit_duration", bit_duration)?;
    let mut bits = preamble_bits(preamble_len);
    bits.extend(message_bits(message)?);
    SymbolSchedule::from_bits(kind, &bits, bit_duration, preamble_len)
}

/// Where the bits sit in a trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BitLayout {
    pub bit_duration: f64,
    pub preamble_len: usize,
    /// Payload bits following the preamble.
    pub n_bits: usize,
    pub guard_fraction: f64,
}

impl BitLayout {
    pub fn new(bit_duration: f64, preamble_len: usize, n_bits: usize) -> Self {
        Self {
            bit_duration,
            preamble_len,
            n_bits,
            guard_fraction: DEFAULT_GUARD_FRACTION,
        }
    }

    pub fn for_schedule(schedule: &SymbolSchedule) -> Self {
        let bit_duration = schedule.symbols()[0].duration;
        Self::new(
            bit_duration,
            schedule.preamble_len(),
            schedule.symbols().len() - schedule.preamble_len(),
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodedBits {
    pub bits: Vec<bool>,
    /// `(level - threshold) / (level_1 - level_0)` per payload bit.
    pub soft: Vec<f64>,
    /// Mean rates (1/s) of the preamble `1` and `0` symbols.
    pub level_1: f64,
    pub level_0: f64,
    pub threshold: f64,
}

impl DecodedBits {
    pub fn bit_errors(&self, reference: &[bool]) -> usize {
        self.bits.iter().zip(reference).filter(|(a, b)| a != b).count()
    }

    pub fn soft_scores_csv(&self) -> String {
        let mut out = String::from("bit_index,bit,soft_score\n");
        for (i, (b, s)) in self.bits.iter().zip(&self.soft).enumerate() {
            out.push_str(&format!("{i},{},{s}\n", *b as u8));
        }
        out
    }
}

/// Hard and soft decisions for each payload bit.
///
/// Each bit level is the mean rate inside its window after trimming
/// `guard_fraction` of the bit at both edges. The threshold is the midpoint
/// of the preamble `1` and `0` means; calibration fails unless the `1`
/// level exceeds the `0` level by at least the quadrature sum of their
/// standard deviations.
pub fn decode_trace(trace: &CountTrace, layout: &BitLayout, clock_offset: f64) -> Result<DecodedBits> {
    check_positive("bit_duration", layout.bit_duration)?;
    if !(0.0..0.5).contains(&layout.guard_fraction) {
        return Err(Error::Invalid(format!(
            "guard fraction {} outside [0, 0.5)",
            layout.guard_fraction
        )));
    }
    if layout.preamble_len < 2 {
        return Err(Error::Invalid("preamble needs at least one 1 and one 0".into()));
    }
    let total_bits = layout.preamble_len + layout.n_bits;
    let span_end = clock_offset + total_bits as f64 * layout.bit_duration;
    let tolerance = 1e-9 * span_end.abs().max(1.0);
    if clock_offset < trace.start_time - tolerance || span_end > trace.end_time() + tolerance {
        return Err(Error::Length(format!(
            "schedule spans [{clock_offset}, {span_end}] s but trace covers [{}, {}] s",
            trace.start_time,
            trace.end_time()
        )));
    }

    let guard = layout.guard_fraction * layout.bit_duration;
    let levels = (0..total_bits)
        .map(|i| {
            let t0 = clock_offset + i as f64 * layout.bit_duration;
            trace
                .window_rate(t0 + guard, t0 + layout.bit_duration - guard)
                .ok_or_else(|| Error::Length(format!("bit {i} window is outside the trace")))
        })
        .collect::<Result<Vec<_>>>()?;

    let reference = preamble_bits(layout.preamble_len);
    let ones: Vec<f64> = levels.iter().zip(&reference).filter(|(_, &b)| b).map(|(l, _)| *l).collect();
    let zeros: Vec<f64> = levels.iter().zip(&reference).filter(|(_, &b)| !b).map(|(l, _)| *l).collect();
    let (level_1, sd_1) = mean_std(&ones);
    let (level_0, sd_0) = mean_std(&zeros);
    let separation = level_1 - level_0;
    let combined_std = sd_1.hypot(sd_0);
    if separation.is_nan() || separation <= 0.0 || separation < combined_std {
        return Err(Error::Calibration {
            separation,
            combined_std,
        });
    }
    let threshold = 0.5 * (level_1 + level_0);
    let payload = &levels[layout.preamble_len..];
    Ok(DecodedBits {
        bits: payload.iter().map(|&l| l > threshold).collect(),
        soft: payload.iter().map(|&l| (l - threshold) / separation).collect(),
        level_1,
        level_0,
        threshold,
    })
}
