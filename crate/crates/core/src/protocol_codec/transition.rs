use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::count_engine::{EncodingState, Timeline, TimelineSegment};
use crate::error::check_non_negative;
use crate::{Error, Result};

use super::SymbolSchedule;

/// Finite switching of Bob's modulator: each change of setting becomes a
/// linear ramp of the encoding parameter lasting `rise_time`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TransitionModel {
    pub rise_time: f64,
    /// Standard deviation of the ramp start around the symbol boundary (s).
    pub jitter: f64,
}

impl TransitionModel {
    pub fn new(rise_time: f64) -> Result<Self> {
        check_non_negative("rise_time", rise_time)?;
        Ok(Self { rise_time, jitter: 0.0 })
    }

    pub fn with_jitter(self, jitter: f64) -> Result<Self> {
        check_non_negative("jitter", jitter)?;
        Ok(Self { jitter, ..self })
    }
}

/// Replaces each instantaneous change of symbol with a ramp centred on the
/// symbol boundary. Jitter is ignored.
pub fn apply_transition(schedule: &SymbolSchedule, tm: &TransitionModel) -> Result<Timeline> {
    check_non_negative("rise_time", tm.rise_time)?;
    let min_duration = min_symbol_duration(schedule, tm)?;
    if tm.rise_time == 0.0 {
        return Ok(schedule.timeline());
    }
    build(schedule, tm.rise_time, min_duration, |_| 0.0)
}

/// As [`apply_transition`], with each ramp start displaced by a normal
/// deviate of standard deviation `jitter`. Displacements are clipped so
/// neighbouring ramps never overlap.
pub fn apply_transition_jittered<R: Rng + ?Sized>(
    schedule: &SymbolSchedule,
    tm: &TransitionModel,
    rng: &mut R,
) -> Result<Timeline> {
    check_non_negative("rise_time", tm.rise_time)?;
    check_non_negative("jitter", tm.jitter)?;
    let min_duration = min_symbol_duration(schedule, tm)?;
    if tm.jitter == 0.0 {
        return apply_transition(schedule, tm);
    }
    let normal = Normal::new(0.0, tm.jitter).map_err(|e| Error::Invalid(e.to_string()))?;
    build(schedule, tm.rise_time, min_duration, |_| normal.sample(rng))
}

fn min_symbol_duration(schedule: &SymbolSchedule, tm: &TransitionModel) -> Result<f64> {
    let min_duration = schedule
        .symbols()
        .iter()
        .map(|s| s.duration)
        .fold(f64::INFINITY, f64::min);
    if tm.rise_time >= min_duration {
        return Err(Error::Invalid(format!(
            "rise time {} s must be shorter than the shortest symbol ({min_duration} s)",
            tm.rise_time
        )));
    }
    Ok(min_duration)
}

fn build(
    schedule: &SymbolSchedule,
    rise: f64,
    min_duration: f64,
    mut shift: impl FnMut(usize) -> f64,
) -> Result<Timeline> {
    let limit = 0.5 * (min_duration - rise);
    let total = schedule.total_duration();
    let mut segments = Vec::with_capacity(schedule.symbols().len() * 2);
    let mut cursor = 0.0;
    let mut boundary = 0.0;
    let mut current: Option<EncodingState> = None;
    let push_hold = |segments: &mut Vec<TimelineSegment>, duration: f64, state| {
        if duration > 0.0 {
            segments.push(TimelineSegment::hold(duration, state));
        }
    };
    for (i, sym) in schedule.symbols().iter().enumerate() {
        let state = sym.kind.state(sym.bit);
        match current {
            Some(prev) if prev != state => {
                let start = boundary - 0.5 * rise + shift(i).clamp(-limit, limit);
                push_hold(&mut segments, start - cursor, prev);
                segments.push(TimelineSegment {
                    duration: rise,
                    start: prev,
                    end: state,
                });
                cursor = start + rise;
            }
            _ => {}
        }
        current = Some(state);
        boundary += sym.duration;
    }
    if let Some(state) = current {
        push_hold(&mut segments, total - cursor, state);
    }
    Ok(Timeline { segments })
}
