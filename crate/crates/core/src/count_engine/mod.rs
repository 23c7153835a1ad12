//! Stochastic detector counts.
//!
//! Expected rates from [`crate::link_model`] are integrated over detector
//! bins and sampled as Poisson counts. Every trace is reproducible from its
//! seed: Alice and Eve draw from distinct ChaCha8 streams keyed by the same
//! seed, so their noise is independent yet replayable.

mod poisson;

use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{check_non_negative, check_positive};
use crate::link_model::{self, ChannelActors, LinkParams};
use crate::protocol_codec::SymbolSchedule;
use crate::{Error, Result};

pub use poisson::{poisson_draw, INVERSION_CROSSOVER};
pub(crate) use poisson::ln_factorial;

/// Detector bin used throughout the experiments (s).
pub const DEFAULT_BIN_DURATION: f64 = 0.05;

/// Sub-steps used to integrate a parameter ramp.
const RAMP_STEPS: usize = 32;

/// Which detector a trace belongs to. Each label owns its own RNG stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StreamLabel {
    Alice,
    Eve,
}

impl StreamLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            StreamLabel::Alice => "alice",
            StreamLabel::Eve => "eve",
        }
    }

    fn stream_id(self) -> u64 {
        match self {
            StreamLabel::Alice => 1,
            StreamLabel::Eve => 2,
        }
    }
}

impl std::str::FromStr for StreamLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "alice" => Ok(StreamLabel::Alice),
            "eve" => Ok(StreamLabel::Eve),
            other => Err(Error::Format(format!("unknown stream label '{other}'"))),
        }
    }
}

/// Time-binned detector counts.
#[derive(Debug, Clone, PartialEq)]
pub struct CountTrace {
    pub bins: Vec<u64>,
    pub bin_duration: f64,
    pub start_time: f64,
    pub seed: u64,
    pub stream_label: StreamLabel,
}

impl CountTrace {
    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.bins.len() as f64 * self.bin_duration
    }

    pub fn end_time(&self) -> f64 {
        self.start_time + self.duration()
    }

    pub fn bin_start(&self, i: usize) -> f64 {
        self.start_time + i as f64 * self.bin_duration
    }

    /// Mean count rate (1/s) over `[t0, t1)`, each bin weighted by its
    /// overlap with the window. `None` if the window misses the trace.
    pub fn window_rate(&self, t0: f64, t1: f64) -> Option<f64> {
        if t0.is_nan() || t1.is_nan() || t1 <= t0 || self.is_empty() {
            return None;
        }
        let first = ((t0 - self.start_time) / self.bin_duration).floor().max(0.0) as usize;
        let (mut counts, mut covered) = (0.0, 0.0);
        for i in first..self.bins.len() {
            let b0 = self.bin_start(i);
            let b1 = b0 + self.bin_duration;
            if b0 >= t1 {
                break;
            }
            // fractions within 1e-9 of 0 or 1 are rounding of aligned edges
            let mut weight = (b1.min(t1) - b0.max(t0)).max(0.0) / self.bin_duration;
            if weight < 1e-9 {
                continue;
            }
            if weight > 1.0 - 1e-9 {
                weight = 1.0;
            }
            counts += self.bins[i] as f64 * weight;
            covered += weight;
        }
        (covered > 0.0).then(|| counts / (covered * self.bin_duration))
    }

    /// CSV with a `#` metadata line followed by `time_s,counts` rows.
    /// `time_s` is the start of each bin.
    pub fn to_csv(&self) -> String {
        let mut out = format!(
            "# bin_duration={},seed={},stream_label={},start_time={}\ntime_s,counts\n",
            self.bin_duration,
            self.seed,
            self.stream_label.as_str(),
            self.start_time
        );
        for (i, c) in self.bins.iter().enumerate() {
            let _ = writeln!(out, "{},{}", self.bin_start(i), c);
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let meta = lines
            .next()
            .and_then(|l| l.strip_prefix("# "))
            .ok_or_else(|| Error::Format("missing metadata line".into()))?;
        let (mut bin_duration, mut seed, mut label, mut start_time) = (None, None, None, 0.0);
        for field in meta.split(',') {
            let (key, value) = field
                .split_once('=')
                .ok_or_else(|| Error::Format(format!("bad metadata field '{field}'")))?;
            let bad = |_| Error::Format(format!("bad value for {key}: '{value}'"));
            match key.trim() {
                "bin_duration" => bin_duration = Some(value.parse::<f64>().map_err(|e| bad(e.to_string()))?),
                "seed" => seed = Some(value.parse::<u64>().map_err(|e| bad(e.to_string()))?),
                "stream_label" => label = Some(value.parse::<StreamLabel>()?),
                "start_time" => start_time = value.parse::<f64>().map_err(|e| bad(e.to_string()))?,
                other => return Err(Error::Format(format!("unknown metadata key '{other}'"))),
            }
        }
        if lines.next().map(str::trim) != Some("time_s,counts") {
            return Err(Error::Format("missing 'time_s,counts' header".into()));
        }
        let bins = lines
            .filter(|l| !l.trim().is_empty())
            .map(|l| {
                l.split(',')
                    .nth(1)
                    .and_then(|c| c.trim().parse::<u64>().ok())
                    .ok_or_else(|| Error::Format(format!("bad row '{l}'")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(CountTrace {
            bins,
            bin_duration: bin_duration.ok_or_else(|| Error::Format("missing bin_duration".into()))?,
            seed: seed.ok_or_else(|| Error::Format("missing seed".into()))?,
            stream_label: label.ok_or_else(|| Error::Format("missing stream_label".into()))?,
            start_time,
        })
    }
}

/// Piecewise-constant expected rate.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RateSchedule {
    segments: Vec<RateSegment>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateSegment {
    pub duration: f64,
    pub rate: f64,
}

impl RateSchedule {
    pub fn new(segments: Vec<RateSegment>) -> Result<Self> {
        let mut s = RateSchedule::default();
        for seg in segments {
            s.push(seg.duration, seg.rate)?;
        }
        Ok(s)
    }

    pub fn constant(duration: f64, rate: f64) -> Result<Self> {
        Self::new(vec![RateSegment { duration, rate }])
    }

    pub fn push(&mut self, duration: f64, rate: f64) -> Result<()> {
        check_positive("segment.duration", duration)?;
        check_non_negative("segment.rate", rate)?;
        self.segments.push(RateSegment { duration, rate });
        Ok(())
    }

    pub fn segments(&self) -> &[RateSegment] {
        &self.segments
    }

    pub fn total_duration(&self) -> f64 {
        self.segments.iter().map(|s| s.duration).sum()
    }

    /// Expected counts in each of `n` consecutive bins of `bin` seconds.
    pub fn bin_means(&self, bin: f64, n: usize) -> Vec<f64> {
        // cumulative integral of the rate, advanced monotonically
        let mut j = 0;
        let mut seg_start = 0.0;
        let mut area_before = 0.0;
        let mut integral_to = |t: f64| -> f64 {
            while j < self.segments.len() && seg_start + self.segments[j].duration <= t {
                area_before += self.segments[j].duration * self.segments[j].rate;
                seg_start += self.segments[j].duration;
                j += 1;
            }
            match self.segments.get(j) {
                Some(seg) => area_before + (t - seg_start).max(0.0) * seg.rate,
                None => area_before,
            }
        };
        let mut prev = integral_to(0.0);
        (1..=n)
            .map(|i| {
                let next = integral_to(i as f64 * bin);
                let lambda = (next - prev).max(0.0);
                prev = next;
                lambda
            })
            .collect()
    }
}

/// Samples a Poisson count trace from a rate schedule.
///
/// Bins start at t = 0; a trailing partial bin is dropped.
pub fn sample_trace(
    schedule: &RateSchedule,
    bin_duration: f64,
    seed: u64,
    stream_label: StreamLabel,
) -> Result<CountTrace> {
    sample_trace_with_drift(schedule, bin_duration, seed, stream_label, None)
}

/// As [`sample_trace`], with an optional slow multiplicative drift
/// `gain(t)` evaluated at each bin centre.
pub fn sample_trace_with_drift(
    schedule: &RateSchedule,
    bin_duration: f64,
    seed: u64,
    stream_label: StreamLabel,
    drift: Option<&dyn Fn(f64) -> f64>,
) -> Result<CountTrace> {
    check_positive("bin_duration", bin_duration)?;
    if schedule.segments.is_empty() {
        return Err(Error::Invalid("empty rate schedule".into()));
    }
    let total = schedule.total_duration();
    if bin_duration > total * (1.0 + 1e-12) {
        return Err(Error::Length(format!(
            "bin duration {bin_duration} s exceeds schedule duration {total} s"
        )));
    }
    let n = ((total / bin_duration) * (1.0 + 1e-12)).floor() as usize;
    let mut rng = stream_rng(seed, stream_label);
    let bins = schedule
        .bin_means(bin_duration, n)
        .into_iter()
        .enumerate()
        .map(|(i, lambda)| {
            let gain = drift.map_or(1.0, |g| g((i as f64 + 0.5) * bin_duration));
            poisson_draw(lambda * gain, &mut rng)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CountTrace {
        bins,
        bin_duration,
        start_time: 0.0,
        seed,
        stream_label,
    })
}

/// The noiseless counterpart of [`sample_trace`]: each bin holds its
/// expected count rounded to the nearest integer.
pub fn expected_trace(
    schedule: &RateSchedule,
    bin_duration: f64,
    stream_label: StreamLabel,
) -> Result<CountTrace> {
    check_positive("bin_duration", bin_duration)?;
    let total = schedule.total_duration();
    if schedule.segments.is_empty() || bin_duration > total * (1.0 + 1e-12) {
        return Err(Error::Length(format!(
            "bin duration {bin_duration} s exceeds schedule duration {total} s"
        )));
    }
    let n = ((total / bin_duration) * (1.0 + 1e-12)).floor() as usize;
    Ok(CountTrace {
        bins: schedule
            .bin_means(bin_duration, n)
            .into_iter()
            .map(|m| m.round() as u64)
            .collect(),
        bin_duration,
        start_time: 0.0,
        seed: 0,
        stream_label,
    })
}

/// Stream reserved for transition timing jitter.
pub const TIMING_STREAM: u64 = 3;

/// RNG for one detector stream of a seed.
pub fn stream_rng(seed: u64, label: StreamLabel) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(label.stream_id());
    rng
}

/// RNG for the transition timing jitter of a seed.
pub fn timing_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(TIMING_STREAM);
    rng
}

/// What Bob's encoder sets on the link at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EncodingState {
    /// Bob's deviation probability.
    pub alpha_sq: f64,
    /// Phase added by Bob to the interferometric phase (rad).
    pub phase_offset: f64,
}

impl EncodingState {
    fn lerp(self, other: Self, f: f64) -> Self {
        Self {
            alpha_sq: self.alpha_sq + (other.alpha_sq - self.alpha_sq) * f,
            phase_offset: self.phase_offset + (other.phase_offset - self.phase_offset) * f,
        }
    }

    fn apply(self, p: &LinkParams, a: &ChannelActors) -> (LinkParams, ChannelActors) {
        // dphi = phi - phi_a - phi_b, so the offset enters through phi_b
        let p = LinkParams {
            phi_b: p.phi_b - self.phase_offset,
            ..*p
        };
        let a = ChannelActors {
            alpha_sq: self.alpha_sq,
            ..*a
        };
        (p, a)
    }
}

/// A span of time over which the encoding moves linearly from `start` to
/// `end` (constant when equal).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimelineSegment {
    pub duration: f64,
    pub start: EncodingState,
    pub end: EncodingState,
}

impl TimelineSegment {
    pub fn hold(duration: f64, state: EncodingState) -> Self {
        Self {
            duration,
            start: state,
            end: state,
        }
    }
}

/// Time evolution of Bob's encoding parameters.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Timeline {
    pub segments: Vec<TimelineSegment>,
}

impl Timeline {
    pub fn total_duration(&self) -> f64 {
        self.segments.iter().map(|s| s.duration).sum()
    }

    /// Alice and Eve rate schedules, each detector's rate evaluated through
    /// the link model. Ramps are integrated with midpoint sub-steps.
    pub fn rate_schedules(
        &self,
        p: &LinkParams,
        a: &ChannelActors,
        dark_rate: f64,
    ) -> Result<(RateSchedule, RateSchedule)> {
        check_non_negative("dark_rate", dark_rate)?;
        if self.segments.is_empty() {
            return Err(Error::Invalid("empty encoding timeline".into()));
        }
        let mut alice = RateSchedule::default();
        let mut eve = RateSchedule::default();
        for seg in &self.segments {
            let steps = if seg.start == seg.end { 1 } else { RAMP_STEPS };
            let dt = seg.duration / steps as f64;
            for k in 0..steps {
                let state = seg.start.lerp(seg.end, (k as f64 + 0.5) / steps as f64);
                let (ps, as_) = state.apply(p, a);
                alice.push(dt, link_model::alice_rate(&ps, &as_)? + dark_rate)?;
                eve.push(dt, link_model::eve_rate(&ps, &as_)? + dark_rate)?;
            }
        }
        Ok((alice, eve))
    }
}

/// Sampling settings shared by both detectors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sampling {
    pub bin_duration: f64,
    pub seed: u64,
    /// Constant dark-count rate added to both detectors (1/s).
    pub dark_rate: f64,
}

impl Sampling {
    pub fn new(bin_duration: f64, seed: u64) -> Self {
        Self {
            bin_duration,
            seed,
            dark_rate: 0.0,
        }
    }
}

/// Alice's and Eve's traces for a symbol schedule.
pub fn dual_trace(
    p: &LinkParams,
    a: &ChannelActors,
    symbols: &SymbolSchedule,
    bin_duration: f64,
    seed: u64,
) -> Result<(CountTrace, CountTrace)> {
    dual_trace_timeline(p, a, &symbols.timeline(), &Sampling::new(bin_duration, seed))
}

/// Alice's and Eve's traces for an arbitrary encoding timeline.
pub fn dual_trace_timeline(
    p: &LinkParams,
    a: &ChannelActors,
    timeline: &Timeline,
    sampling: &Sampling,
) -> Result<(CountTrace, CountTrace)> {
    let (alice_rates, eve_rates) = timeline.rate_schedules(p, a, sampling.dark_rate)?;
    let alice = sample_trace(&alice_rates, sampling.bin_duration, sampling.seed, StreamLabel::Alice)?;
    let eve = sample_trace(&eve_rates, sampling.bin_duration, sampling.seed, StreamLabel::Eve)?;
    Ok((alice, eve))
}
