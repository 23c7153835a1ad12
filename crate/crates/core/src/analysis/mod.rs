//! Estimators and experiment reproductions built on simulated traces.

pub mod correlation;
pub mod eye;
pub mod snr;
pub mod stats;
pub mod sweep;

pub use correlation::{correlation, random_correlation_baseline, NullDistribution};
pub use eye::{build_eye, build_eye_with, eye_csv, eye_metrics_csv, simulate_eye, EyeDiagram, EyeMetrics, EyeRun};
pub use snr::{estimate_snr, estimate_snr_with, NoiseReference, SnrEstimate};
pub use sweep::{classical_crossing, derive_seed, sweep_csv, sweep_snr, sweep_snr_with, SweepConfig, SweepRow};
