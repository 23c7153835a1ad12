//! Encoding of payloads into Bob's actions and decoding of Alice's (or
//! Eve's) count traces.
//!
//! Bit polarity: a `1` is the high-count level. For amplitude keying that
//! is the open path (`alpha^2 = 0`), for phase keying constructive
//! interference (`dphi = 0`).

mod image;
mod pgm;
mod text;
mod transition;

use std::f64::consts::PI;

use crate::count_engine::{EncodingState, Timeline, TimelineSegment};
use crate::error::check_positive;
use crate::{Error, Result};

pub use image::{image_schedule, reconstruct_image, ImageRaster, ImageScan, ScanEvent, ScanGeometry};
pub use pgm::{read_pgm, write_pgm_p2, write_pgm_p5};
pub use text::{
    bits_to_bytes, decode_trace, encode_bytes, encode_text, encode_text_with_preamble, message_bits,
    preamble_bits, BitLayout, DecodedBits, DEFAULT_GUARD_FRACTION, DEFAULT_PREAMBLE_LEN,
};
pub use transition::{apply_transition, apply_transition_jittered, TransitionModel};

/// Which property of the signal mode Bob modulates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EncodingKind {
    Amplitude,
    Phase,
}

impl EncodingKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EncodingKind::Amplitude => "amplitude",
            EncodingKind::Phase => "phase",
        }
    }

    /// Link setting that writes `bit`.
    pub fn state(self, bit: bool) -> EncodingState {
        match (self, bit) {
            (EncodingKind::Amplitude, true) => EncodingState { alpha_sq: 0.0, phase_offset: 0.0 },
            (EncodingKind::Amplitude, false) => EncodingState { alpha_sq: 1.0, phase_offset: 0.0 },
            (EncodingKind::Phase, true) => EncodingState { alpha_sq: 0.0, phase_offset: 0.0 },
            (EncodingKind::Phase, false) => EncodingState { alpha_sq: 0.0, phase_offset: PI },
        }
    }
}

impl std::str::FromStr for EncodingKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "amplitude" => Ok(EncodingKind::Amplitude),
            "phase" => Ok(EncodingKind::Phase),
            other => Err(Error::Invalid(format!(
                "unknown encoding kind '{other}' (expected amplitude|phase)"
            ))),
        }
    }
}

/// One binary symbol held for `duration` seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EncodingSymbol {
    pub kind: EncodingKind,
    pub bit: bool,
    pub duration: f64,
}

impl EncodingSymbol {
    pub fn new(kind: EncodingKind, bit: bool, duration: f64) -> Result<Self> {
        check_positive("symbol.duration", duration)?;
        Ok(Self { kind, bit, duration })
    }

    /// `alpha^2` for amplitude symbols, `dphi` offset for phase symbols.
    pub fn value(&self) -> f64 {
        let state = self.kind.state(self.bit);
        match self.kind {
            EncodingKind::Amplitude => state.alpha_sq,
            EncodingKind::Phase => state.phase_offset,
        }
    }
}

/// Time-ordered symbols of one kind; the first `preamble_len` symbols are
/// the calibration preamble.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolSchedule {
    symbols: Vec<EncodingSymbol>,
    preamble_len: usize,
}

impl SymbolSchedule {
    pub fn new(symbols: Vec<EncodingSymbol>, preamble_len: usize) -> Result<Self> {
        let first = symbols
            .first()
            .ok_or_else(|| Error::Invalid("symbol schedule is empty".into()))?;
        if symbols.iter().any(|s| s.kind != first.kind) {
            return Err(Error::Invalid("mixed encoding kinds in one schedule".into()));
        }
        if preamble_len > symbols.len() {
            return Err(Error::Invalid("preamble longer than schedule".into()));
        }
        Ok(Self { symbols, preamble_len })
    }

    /// Uniform-duration schedule from a bit sequence.
    pub fn from_bits(kind: EncodingKind, bits: &[bool], bit_duration: f64, preamble_len: usize) -> Result<Self> {
        let symbols = bits
            .iter()
            .map(|&b| EncodingSymbol::new(kind, b, bit_duration))
            .collect::<Result<Vec<_>>>()?;
        Self::new(symbols, preamble_len)
    }

    pub fn symbols(&self) -> &[EncodingSymbol] {
        &self.symbols
    }

    pub fn preamble_len(&self) -> usize {
        self.preamble_len
    }

    pub fn kind(&self) -> EncodingKind {
        self.symbols[0].kind
    }

    pub fn bits(&self) -> Vec<bool> {
        self.symbols.iter().map(|s| s.bit).collect()
    }

    pub fn payload_bits(&self) -> Vec<bool> {
        self.symbols[self.preamble_len..].iter().map(|s| s.bit).collect()
    }

    pub fn total_duration(&self) -> f64 {
        self.symbols.iter().map(|s| s.duration).sum()
    }

    /// Instantaneous-switching timeline of the link settings.
    pub fn timeline(&self) -> Timeline {
        Timeline {
            segments: self
                .symbols
                .iter()
                .map(|s| TimelineSegment::hold(s.duration, s.kind.state(s.bit)))
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_rejects_empty_and_mixed() {
        assert!(SymbolSchedule::new(vec![], 0).is_err());
        let a = EncodingSymbol::new(EncodingKind::Amplitude, true, 1.0).unwrap();
        let p = EncodingSymbol::new(EncodingKind::Phase, true, 1.0).unwrap();
        assert!(SymbolSchedule::new(vec![a, p], 0).is_err());
        assert!(EncodingSymbol::new(EncodingKind::Phase, true, 0.0).is_err());
    }

    #[test]
    fn symbol_values_follow_polarity() {
        let v = |k, b| EncodingSymbol::new(k, b, 1.0).unwrap().value();
        assert_eq!(v(EncodingKind::Amplitude, true), 0.0);
        assert_eq!(v(EncodingKind::Amplitude, false), 1.0);
        assert_eq!(v(EncodingKind::Phase, true), 0.0);
        assert_eq!(v(EncodingKind::Phase, false), PI);
    }
}
