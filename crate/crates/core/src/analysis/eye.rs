//! Eye diagrams of a periodic `1010...` pattern.
//!
//! The trace is cut into consecutive 3-bit segments starting at the clock,
//! so `101` and `010` segments alternate. Bin counts are normalised by the
//! mean levels of the middle bit, taken over its central half. Rails are
//! read bin by bin (no interpolation) on the middle bit `[T, 2T]`:
//!
//! - the upper rail is the minimum over segments whose middle bit is `1`,
//!   the lower rail the maximum over the others;
//! - `vertical_opening` is their difference at `1.5 T`;
//! - `horizontal_opening` is the fraction of the bit where it is positive;
//! - `transition_fraction` is the 0-to-1 time of the mean rising edge,
//!   after aligning each segment on its own edge, over `T / 2`. The time is
//!   read from the area between the edge and an ideal step, scaled as for
//!   a raised-cosine edge, so a noiseless phase ramp of length `r` reads
//!   exactly `r`.

use std::fmt::Write as _;

use crate::count_engine::{dual_trace_timeline, timing_rng, CountTrace, Sampling};
use crate::error::check_positive;
use crate::link_model::{ChannelActors, LinkParams};
use crate::protocol_codec::{apply_transition_jittered, preamble_bits, EncodingKind, SymbolSchedule, TransitionModel};
use crate::{Error, Result};

pub const DEFAULT_REPETITIONS: usize = 20;
/// Evaluation points across one bit for the rails.
pub const GRID_POINTS: usize = 200;
/// Full duration of a raised-cosine edge over its area deviation from an
/// ideal step, `2 pi / (pi - 2)`.
pub const EDGE_AREA_TO_TRANSITION: f64 = 2.0 * std::f64::consts::PI / (std::f64::consts::PI - 2.0);
/// Narrowest edge-location window, in bins either side.
pub const MIN_EDGE_WINDOW_BINS: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EyeMetrics {
    pub vertical_opening: f64,
    pub horizontal_opening: f64,
    pub transition_fraction: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EyeDiagram {
    pub bit_rate: f64,
    /// Bin centres relative to the segment start (s), one list per segment.
    pub offsets: Vec<Vec<f64>>,
    /// Raw counts, one list per segment, all of the same length.
    pub segments: Vec<Vec<u64>>,
    /// True where the segment's middle bit is `1`.
    pub middle_high: Vec<bool>,
    pub level_1: f64,
    pub level_0: f64,
    pub metrics: EyeMetrics,
}

pub fn build_eye(trace: &CountTrace, bit_rate: f64, clock: f64) -> Result<EyeDiagram> {
    build_eye_with(trace, bit_rate, clock, DEFAULT_REPETITIONS)
}

/// `repetitions` counts 3-bit segments; at least two are needed.
pub fn build_eye_with(trace: &CountTrace, bit_rate: f64, clock: f64, repetitions: usize) -> Result<EyeDiagram> {
    check_positive("bit_rate", bit_rate)?;
    if repetitions < 2 {
        return Err(Error::Invalid("eye needs at least two segments".into()));
    }
    let t_bit = 1.0 / bit_rate;
    let bin = trace.bin_duration;
    let n = (3.0 * t_bit / bin + 1e-9).floor() as usize;
    if n < 6 {
        return Err(Error::Invalid(format!("bin {bin} s too coarse for {bit_rate} bit/s")));
    }

    let mut offsets = Vec::with_capacity(repetitions);
    let mut segments = Vec::with_capacity(repetitions);
    for k in 0..repetitions {
        let start = clock + 3.0 * k as f64 * t_bit;
        let first = ((start - trace.start_time) / bin - 1e-9).ceil();
        if first < 0.0 || first as usize + n > trace.len() {
            return Err(Error::Length(format!(
                "segment {k} at {start} s falls outside the trace [{}, {}] s",
                trace.start_time,
                trace.end_time()
            )));
        }
        let first = first as usize;
        offsets.push((first..first + n).map(|i| trace.bin_start(i) + 0.5 * bin - start).collect::<Vec<_>>());
        segments.push(trace.bins[first..first + n].to_vec());
    }

    // central half of the middle bit
    let centre = |k: usize| -> Vec<f64> {
        offsets[k]
            .iter()
            .zip(&segments[k])
            .filter(|(&t, _)| (1.25 * t_bit..=1.75 * t_bit).contains(&t))
            .map(|(_, &c)| c as f64)
            .collect()
    };
    let (mut even, mut odd) = (Vec::new(), Vec::new());
    for k in 0..repetitions {
        if k % 2 == 0 { even.extend(centre(k)) } else { odd.extend(centre(k)) }
    }
    let (m_even, v_even) = mean_var(&even);
    let (m_odd, v_odd) = mean_var(&odd);
    let odd_high = m_odd > m_even;
    let (level_1, level_0) = if odd_high { (m_odd, m_even) } else { (m_even, m_odd) };
    let stderr = (v_even / even.len() as f64 + v_odd / odd.len() as f64).sqrt();
    if even.is_empty() || odd.is_empty() || level_1 - level_0 <= 3.0 * stderr {
        return Err(Error::Invalid(
            "trace does not show an alternating pattern at this clock and bit rate".into(),
        ));
    }
    let middle_high: Vec<bool> = (0..repetitions).map(|k| (k % 2 == 1) == odd_high).collect();

    let span = level_1 - level_0;
    let curves: Vec<Vec<f64>> = segments
        .iter()
        .map(|s| s.iter().map(|&c| (c as f64 - level_0) / span).collect())
        .collect();
    let metrics = eye_metrics(&offsets, &curves, &middle_high, t_bit);
    Ok(EyeDiagram {
        bit_rate,
        offsets,
        segments,
        middle_high,
        level_1,
        level_0,
        metrics,
    })
}

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let (m, s) = super::stats::mean_std(xs);
    (m, s * s)
}

/// Linear interpolation of `(xs, ys)` at `t`, clamped to the end values.
fn interp(xs: &[f64], ys: &[f64], t: f64) -> f64 {
    let i = xs.partition_point(|&x| x < t);
    if i == 0 {
        return ys[0];
    }
    if i == xs.len() {
        return ys[xs.len() - 1];
    }
    let f = (t - xs[i - 1]) / (xs[i] - xs[i - 1]);
    ys[i - 1] + f * (ys[i] - ys[i - 1])
}

/// Value of the bin whose span contains `t`; bins are centred on `xs`.
fn nearest(xs: &[f64], ys: &[f64], t: f64) -> f64 {
    let half_bin = 0.5 * (xs[1] - xs[0]);
    let i = xs.partition_point(|&x| x + half_bin <= t);
    ys[i.min(ys.len() - 1)]
}

fn eye_metrics(offsets: &[Vec<f64>], curves: &[Vec<f64>], middle_high: &[bool], t_bit: f64) -> EyeMetrics {
    let opening = |t: f64| {
        let mut upper = f64::INFINITY;
        let mut lower = f64::NEG_INFINITY;
        for ((x, y), &high) in offsets.iter().zip(curves).zip(middle_high) {
            let v = nearest(x, y, t);
            if high {
                upper = upper.min(v);
            } else {
                lower = lower.max(v);
            }
        }
        upper - lower
    };
    let vertical_opening = opening(1.5 * t_bit).clamp(0.0, 1.0);
    let open_points = (0..GRID_POINTS)
        .filter(|&j| opening(t_bit * (1.0 + (j as f64 + 0.5) / GRID_POINTS as f64)) > 0.0)
        .count();
    EyeMetrics {
        vertical_opening,
        horizontal_opening: open_points as f64 / GRID_POINTS as f64,
        transition_fraction: transition_fraction(offsets, curves, middle_high, t_bit),
    }
}

/// Each segment has one nominal rising edge: at `T` when its middle bit is
/// `1`, at `2T` otherwise. The edge is located from the area under the
/// curve, which for a unit step equals the time spent high: first over
/// `edge +- T/2`, then over windows halved around the previous guess while
/// they stay at least `MIN_EDGE_WINDOW_BINS` bins wide.
///
/// Aligned curves are averaged over twice the last window (at most
/// `+- T/2`). The transition time of the mean edge is
/// `EDGE_AREA_TO_TRANSITION` times its area deviation from an ideal step
/// placed at the mean edge's own area centre.
fn transition_fraction(offsets: &[Vec<f64>], curves: &[Vec<f64>], middle_high: &[bool], t_bit: f64) -> f64 {
    let bin = offsets[0][1] - offsets[0][0];
    let half = 0.5 * t_bit;
    let steps = GRID_POINTS;
    let locate = |x: &[f64], y: &[f64], centre: f64, w: f64| {
        let dt = 2.0 * w / steps as f64;
        let area: f64 = (0..steps)
            .map(|j| interp(x, y, centre - w + (j as f64 + 0.5) * dt) * dt)
            .sum();
        centre + w - area.clamp(0.0, 2.0 * w)
    };
    let mut w_last = half;
    let mut w = 0.5 * half;
    while w >= MIN_EDGE_WINDOW_BINS * bin {
        w_last = w;
        w *= 0.5;
    }
    let span = (2.0 * w_last).min(half);
    let dt = 2.0 * span / steps as f64;
    let mut mean = vec![0.0; steps];
    for ((x, y), &high) in offsets.iter().zip(curves).zip(middle_high) {
        let nominal = if high { t_bit } else { 2.0 * t_bit };
        let mut edge = locate(x, y, nominal, half);
        let mut w = 0.5 * half;
        while w >= w_last {
            edge = locate(x, y, edge, w);
            w *= 0.5;
        }
        for (j, m) in mean.iter_mut().enumerate() {
            *m += interp(x, y, edge - span + (j as f64 + 0.5) * dt) / curves.len() as f64;
        }
    }
    let centre = (2.0 * span - mean.iter().sum::<f64>() * dt).clamp(0.0, 2.0 * span);
    let deviation: f64 = mean
        .iter()
        .enumerate()
        .map(|(j, &m)| if (j as f64 + 0.5) * dt < centre { m } else { 1.0 - m })
        .sum::<f64>()
        * dt;
    (EDGE_AREA_TO_TRANSITION * deviation / half).clamp(0.0, 1.0)
}

/// Settings of a simulated eye measurement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EyeRun {
    pub kind: EncodingKind,
    pub bit_rate: f64,
    pub transition: TransitionModel,
    pub bin_duration: f64,
    pub seed: u64,
}

/// Alice's trace for `3 * repetitions + 2` alternating bits starting with
/// `1`, and its eye with the clock at zero.
pub fn simulate_eye(p: &LinkParams, a: &ChannelActors, run: &EyeRun, repetitions: usize) -> Result<(CountTrace, EyeDiagram)> {
    check_positive("bit_rate", run.bit_rate)?;
    let bits = preamble_bits(3 * repetitions + 2);
    let schedule = SymbolSchedule::from_bits(run.kind, &bits, 1.0 / run.bit_rate, 0)?;
    let mut rng = timing_rng(run.seed);
    let timeline = apply_transition_jittered(&schedule, &run.transition, &mut rng)?;
    let (alice, _) = dual_trace_timeline(p, a, &timeline, &Sampling::new(run.bin_duration, run.seed))?;
    let eye = build_eye_with(&alice, run.bit_rate, 0.0, repetitions)?;
    Ok((alice, eye))
}

/// Long-format table: `time_s,segment_id,counts`.
pub fn eye_csv(eye: &EyeDiagram) -> String {
    let mut out = String::from("time_s,segment_id,counts\n");
    for (k, (x, c)) in eye.offsets.iter().zip(&eye.segments).enumerate() {
        for (t, n) in x.iter().zip(c) {
            let _ = writeln!(out, "{t},{k},{n}");
        }
    }
    out
}

/// `metric,value` sidecar for the eye table.
pub fn eye_metrics_csv(eye: &EyeDiagram) -> String {
    let m = &eye.metrics;
    format!(
        "metric,value\nbit_rate,{}\nlevel_1,{}\nlevel_0,{}\nvertical_opening,{}\nhorizontal_opening,{}\ntransition_fraction,{}\n",
        eye.bit_rate, eye.level_1, eye.level_0, m.vertical_opening, m.horizontal_opening, m.transition_fraction
    )
}
