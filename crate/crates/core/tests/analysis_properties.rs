use ndarray::Array2;
use proptest::prelude::*;
use qlink_core::analysis::stats::{mean_std, weighted_slope};
use qlink_core::analysis::*;
use qlink_core::count_engine::{expected_trace, sample_trace, RateSchedule, StreamLabel};
use qlink_core::link_model::desk_preset;
use qlink_core::protocol_codec::{apply_transition, preamble_bits, EncodingKind, SymbolSchedule, TransitionModel};
use qlink_core::Error;

fn constant(rate: f64, duration: f64, seed: u64) -> qlink_core::count_engine::CountTrace {
    sample_trace(&RateSchedule::constant(duration, rate).unwrap(), 0.05, seed, StreamLabel::Eve).unwrap()
}

#[test]
fn estimate_converges_to_analytic_snr() {
    // 1 s blocks: separation 400, sigma(C_1) = sqrt(1200)
    let expected = 400.0 / 1200f64.sqrt();
    let values: Vec<f64> = (0..20)
        .map(|seed| {
            let c1 = constant(1200.0, 400.0, 2 * seed);
            let c0 = constant(800.0, 400.0, 2 * seed + 1);
            estimate_snr(&c1, &c0, 1.0, 400).unwrap().value
        })
        .collect();
    for v in &values {
        assert!((v / expected - 1.0).abs() < 0.1, "{v} vs {expected}");
    }
}

#[test]
fn calibration_rates_give_snr_near_36() {
    let expected = 4000.0 / 12355f64.sqrt();
    let values: Vec<f64> = (0..20)
        .map(|seed| {
            let c1 = constant(12355.0, 20.0, 100 + seed);
            let c0 = constant(8355.0, 20.0, 200 + seed);
            estimate_snr(&c1, &c0, 1.0, 20).unwrap().value
        })
        .collect();
    // a single 20-block sigma scatters by ~16%, so the seed mean is tested
    let (m, _) = mean_std(&values);
    assert!((m / expected - 1.0).abs() < 0.25, "{m} vs {expected}");
}

#[test]
fn identical_rates_give_zero_snr() {
    let values: Vec<f64> = (0..20)
        .map(|seed| {
            let c1 = constant(5000.0, 20.0, 300 + seed);
            let c0 = constant(5000.0, 20.0, 400 + seed);
            estimate_snr(&c1, &c0, 1.0, 20).unwrap().value
        })
        .collect();
    let (m, _) = mean_std(&values);
    assert!(m.abs() < 3.0 / 20f64.sqrt(), "{m}");
}

#[test]
fn short_trace_is_rejected() {
    let t = constant(100.0, 5.0, 1);
    assert!(matches!(estimate_snr(&t, &t, 1.0, 20), Err(Error::Length(_))));
}

#[test]
fn unjammed_sweep_point_matches_calibration() {
    let (p, a) = desk_preset();
    let seeds: Vec<u64> = (0..20).collect();
    let row = sweep_snr(&p, &a, &[0.0], &seeds).unwrap()[0];
    assert!((row.analytic_classical - 200f64.sqrt()).abs() < 1e-9);
    assert!((row.snr_classical - 200f64.sqrt()).abs() < 4.0 * row.err_classical.max(0.5), "{row:?}");
}

#[test]
fn quantum_snr_is_flat_across_jamming() {
    let (p, a) = desk_preset();
    let ratios = [1.0, 1e2, 1e4];
    let seeds: Vec<u64> = (0..20).collect();
    let rows = sweep_snr(&p, &a, &ratios, &seeds).unwrap();
    let x: Vec<f64> = rows.iter().map(|r| r.ratio.log10()).collect();
    let y: Vec<f64> = rows.iter().map(|r| r.snr_quantum).collect();
    let s: Vec<f64> = rows.iter().map(|r| r.err_quantum).collect();
    let (slope, err) = weighted_slope(&x, &y, &s);
    assert!(slope.abs() < 2.0 * err, "{slope} +- {err}");
}

fn noiseless_eye(clock_bits: usize) -> EyeMetrics {
    let (p, a) = desk_preset();
    let bit_rate = 2.0;
    let schedule = SymbolSchedule::from_bits(EncodingKind::Phase, &preamble_bits(80), 1.0 / bit_rate, 0).unwrap();
    let timeline = apply_transition(&schedule, &TransitionModel::new(0.03).unwrap()).unwrap();
    let (alice, _) = timeline.rate_schedules(&p, &a, 0.0).unwrap();
    let trace = expected_trace(&alice, 0.005, StreamLabel::Alice).unwrap();
    build_eye(&trace, bit_rate, clock_bits as f64 / bit_rate).unwrap().metrics
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn eye_is_invariant_under_whole_bit_clock_shifts(k in 1usize..10) {
        let base = noiseless_eye(0);
        let shifted = noiseless_eye(k);
        prop_assert!((base.vertical_opening - shifted.vertical_opening).abs() < 1e-9);
        prop_assert!((base.horizontal_opening - shifted.horizontal_opening).abs() < 1e-9);
        prop_assert!((base.transition_fraction - shifted.transition_fraction).abs() < 1e-9);
    }
}

fn matrix() -> impl Strategy<Value = Array2<f64>> {
    prop::collection::vec(-100.0..100.0f64, 12).prop_map(|v| Array2::from_shape_vec((3, 4), v).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn correlation_is_symmetric_scale_invariant_and_bounded(
        m in matrix(),
        n in matrix(),
        scale in 1e-3..1e3f64,
        shift in -1e3..1e3f64,
    ) {
        let r = correlation(&m, &n).unwrap();
        prop_assert!((-1.0..=1.0).contains(&r));
        prop_assert!((r - correlation(&n, &m).unwrap()).abs() < 1e-12);
        let scaled = m.mapv(|v| scale * v + shift);
        prop_assert!((r - correlation(&scaled, &n).unwrap()).abs() < 1e-9);
    }
}

#[test]
fn correlation_extremes() {
    let m = Array2::from_shape_fn((4, 5), |(r, c)| ((r * 5 + c) % 3 == 0) as u8 as f64);
    assert!((correlation(&m, &m).unwrap() - 1.0).abs() < 1e-12);
    assert!((correlation(&m, &m.mapv(|v| 1.0 - v)).unwrap() + 1.0).abs() < 1e-12);
    assert!(matches!(correlation(&m, &Array2::zeros((4, 5))), Err(Error::ZeroVariance(_))));
    assert!(matches!(correlation(&m, &Array2::zeros((5, 4))), Err(Error::Shape(_))));
}

#[test]
fn null_distribution_is_centred_with_pixel_scale_spread() {
    let reference = Array2::from_shape_fn((24, 32), |(r, c)| ((r / 4 + c / 4) % 2) as f64);
    let n = 100_000;
    let null = random_correlation_baseline(&reference, n, 5).unwrap();
    assert!(null.mean.abs() < 3.0 * null.std / (n as f64).sqrt(), "{null:?}");
    let pixel_scale = 1.0 / (reference.len() as f64).sqrt();
    assert!((null.std / pixel_scale - 1.0).abs() < 0.1, "{null:?}");
    assert!(null.lower < 0.0 && null.upper > 0.0);
    assert!(random_correlation_baseline(&reference, 10, 5).is_err());
}
