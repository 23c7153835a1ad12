use ndarray::Array2;

use crate::count_engine::{CountTrace, EncodingState, Timeline, TimelineSegment};
use crate::error::check_positive;
use crate::{Error, Result};

/// Transmission map of the object Bob scans through the signal path.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageRaster {
    /// Intensity transmission per pixel, in [0, 1].
    pub transmission: Array2<f64>,
    /// Pixel pitch (mm).
    pub pixel_pitch: f64,
    /// Horizontal stage speed (mm/s).
    pub scan_speed: f64,
}

impl ImageRaster {
    pub fn new(transmission: Array2<f64>, pixel_pitch: f64, scan_speed: f64) -> Result<Self> {
        check_positive("pixel_pitch", pixel_pitch)?;
        check_positive("scan_speed", scan_speed)?;
        if transmission.is_empty() {
            return Err(Error::Shape("raster has no pixels".into()));
        }
        if let Some(bad) = transmission.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::Domain {
                field: "raster.transmission",
                value: *bad,
                reason: "must lie in [0, 1]",
            });
        }
        Ok(Self {
            transmission,
            pixel_pitch,
            scan_speed,
        })
    }
}

/// One detector dwell of the raster scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanEvent {
    pub row: usize,
    pub col: usize,
    pub alpha_sq: f64,
}

/// Timing layout needed to turn a trace back into an image.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanGeometry {
    pub rows: usize,
    pub cols: usize,
    pub events_per_pixel: usize,
    /// Duration of one event (s).
    pub dwell: f64,
    /// Open-path reference events, followed by as many blocked-path events,
    /// placed before the raster.
    pub reference_events: usize,
}

impl ScanGeometry {
    pub fn raster_events(&self) -> usize {
        self.rows * self.cols * self.events_per_pixel
    }

    pub fn total_events(&self) -> usize {
        2 * self.reference_events + self.raster_events()
    }

    pub fn total_duration(&self) -> f64 {
        self.total_events() as f64 * self.dwell
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImageScan {
    pub geometry: ScanGeometry,
    /// Raster events in scan order; reference events are not listed.
    pub events: Vec<ScanEvent>,
}

impl ImageScan {
    /// Link settings over time: open reference, blocked reference, raster.
    pub fn timeline(&self) -> Timeline {
        let g = &self.geometry;
        let hold = |alpha_sq| {
            TimelineSegment::hold(g.dwell, EncodingState { alpha_sq, phase_offset: 0.0 })
        };
        let mut segments = Vec::with_capacity(g.total_events());
        segments.extend((0..g.reference_events).map(|_| hold(0.0)));
        segments.extend((0..g.reference_events).map(|_| hold(1.0)));
        segments.extend(self.events.iter().map(|e| hold(e.alpha_sq)));
        Timeline { segments }
    }
}

/// Row-major horizontal raster scan. Each pixel is crossed in
/// `pixel_pitch / scan_speed` seconds and sampled once per `dwell`; an
/// opaque pixel blocks Bob's path, so `alpha^2 = 1 - transmission`.
///
/// One row's worth of open and blocked reference events is reserved for
/// calibration.
pub fn image_schedule(raster: &ImageRaster, dwell: f64) -> Result<ImageScan> {
    check_positive("dwell", dwell)?;
    let crossing = raster.pixel_pitch / raster.scan_speed;
    let events_per_pixel = ((crossing / dwell).round() as usize).max(1);
    let (rows, cols) = raster.transmission.dim();
    let events = raster
        .transmission
        .indexed_iter()
        .flat_map(|((row, col), &t)| {
            std::iter::repeat_n(ScanEvent { row, col, alpha_sq: 1.0 - t }, events_per_pixel)
        })
        .collect();
    Ok(ImageScan {
        geometry: ScanGeometry {
            rows,
            cols,
            events_per_pixel,
            dwell,
            reference_events: cols * events_per_pixel,
        },
        events,
    })
}

/// Transmission estimate per pixel.
///
/// Pixel means are normalised between the blocked and open reference
/// levels, clamped to [0, 1] and squared: the idler fringe follows the
/// amplitude transmission, so the square recovers intensity transmission.
pub fn reconstruct_image(trace: &CountTrace, geometry: &ScanGeometry) -> Result<Array2<f64>> {
    check_positive("dwell", geometry.dwell)?;
    if geometry.reference_events == 0 || geometry.raster_events() == 0 {
        return Err(Error::Shape("scan geometry has no reference or raster events".into()));
    }
    let needed = geometry.total_duration();
    if trace.start_time > 1e-9 || trace.end_time() + 1e-9 * needed.max(1.0) < needed {
        return Err(Error::Shape(format!(
            "trace covers [{}, {}] s but the scan needs [0, {needed}] s",
            trace.start_time,
            trace.end_time()
        )));
    }
    let event_rate = |i: usize| {
        let t0 = i as f64 * geometry.dwell;
        trace
            .window_rate(t0, t0 + geometry.dwell)
            .ok_or_else(|| Error::Shape(format!("event {i} outside trace")))
    };
    // running mean, exact when all events agree
    let mean_over = |range: std::ops::Range<usize>| -> Result<f64> {
        let mut mean = 0.0;
        for (n, i) in range.enumerate() {
            mean += (event_rate(i)? - mean) / (n + 1) as f64;
        }
        Ok(mean)
    };
    let r = geometry.reference_events;
    let open = mean_over(0..r)?;
    let blocked = mean_over(r..2 * r)?;
    let span = open - blocked;
    if span == 0.0 {
        return Err(Error::Calibration {
            separation: 0.0,
            combined_std: 0.0,
        });
    }
    let mut image = Array2::zeros((geometry.rows, geometry.cols));
    let k = geometry.events_per_pixel;
    for (pixel, value) in image.iter_mut().enumerate() {
        let first = 2 * r + pixel * k;
        let level = mean_over(first..first + k)?;
        let amplitude = ((level - blocked) / span).clamp(0.0, 1.0);
        *value = amplitude * amplitude;
    }
    Ok(image)
}
