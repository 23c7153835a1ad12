use proptest::prelude::*;
use qlink_core::count_engine::*;
use qlink_core::link_model::{ChannelActors, LinkParams};
use qlink_core::protocol_codec::{EncodingKind, SymbolSchedule};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{Discrete, DiscreteCDF, Poisson};

fn draws(lambda: f64, n: usize, seed: u64) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| poisson_draw(lambda, &mut rng).unwrap()).collect()
}

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    (m, xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0))
}

/// Largest gap between the empirical and exact CDF over the sampled range.
fn ks_statistic(samples: &[u64], lambda: f64) -> f64 {
    let exact = Poisson::new(lambda).unwrap();
    let mut sorted = samples.to_vec();
    sorted.sort_unstable();
    let n = sorted.len() as f64;
    let max = *sorted.last().unwrap();
    let lo = sorted[0].saturating_sub(1);
    let mut d: f64 = 0.0;
    let mut idx = 0;
    for k in lo..=max {
        while idx < sorted.len() && sorted[idx] <= k {
            idx += 1;
        }
        d = d.max((idx as f64 / n - exact.cdf(k)).abs());
    }
    d
}

#[test]
fn poisson_ks_at_one_percent() {
    let n = 20_000;
    // asymptotic 1% critical value; conservative for discrete laws
    let critical = 1.628 / (n as f64).sqrt();
    for (i, lambda) in [0.1, 1.0, 50.0, 1e4].into_iter().enumerate() {
        let d = ks_statistic(&draws(lambda, n, 100 + i as u64), lambda);
        assert!(d < critical, "lambda {lambda}: D = {d} >= {critical}");
    }
}

#[test]
fn poisson_pmf_at_fifty() {
    let n = 1_000_000;
    let hits = draws(50.0, n, 7).iter().filter(|&&k| k == 50).count() as f64;
    let p = Poisson::new(50.0).unwrap().pmf(50);
    let se = (p * (1.0 - p) / n as f64).sqrt();
    assert!((hits / n as f64 - p).abs() < 3.0 * se, "{} vs {p}", hits / n as f64);
}

#[test]
fn poisson_large_mean() {
    let lambda = 1e8;
    let n = 10_000;
    let xs: Vec<f64> = draws(lambda, n, 11).into_iter().map(|k| k as f64).collect();
    let (m, _) = mean_var(&xs);
    assert!((m / lambda - 1.0).abs() < 5e-4);
}

#[test]
fn fano_factor_of_constant_rate_trace() {
    let sched = RateSchedule::constant(0.05 * 1e5, 1000.0).unwrap();
    let trace = sample_trace(&sched, 0.05, 5, StreamLabel::Alice).unwrap();
    assert_eq!(trace.len(), 100_000);
    let xs: Vec<f64> = trace.bins.iter().map(|&k| k as f64).collect();
    let (m, v) = mean_var(&xs);
    assert!((m - 50.0).abs() < 0.2, "mean {m}");
    let fano = v / m;
    assert!((0.97..=1.03).contains(&fano), "fano {fano}");
}

#[test]
fn alice_and_eve_streams_are_uncorrelated() {
    let (p, a) = qlink_core::link_model::desk_preset();
    let a = ChannelActors { n_class: 1e5, ..a };
    let schedule = SymbolSchedule::from_bits(EncodingKind::Amplitude, &[true], 500.0, 0).unwrap();
    let (alice, eve) = dual_trace(&p, &a, &schedule, 0.05, 21).unwrap();
    let x: Vec<f64> = alice.bins.iter().map(|&k| k as f64).collect();
    let y: Vec<f64> = eve.bins.iter().map(|&k| k as f64).collect();
    let (mx, vx) = mean_var(&x);
    let (my, vy) = mean_var(&y);
    let n = x.len() as f64;
    let cov = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum::<f64>() / (n - 1.0);
    let r = cov / (vx * vy).sqrt();
    assert!(r.abs() < 3.0 / n.sqrt(), "r = {r}");
}

#[test]
fn back_to_back_segments_match_separate_traces() {
    let mut joined = RateSchedule::constant(500.0, 200.0).unwrap();
    joined.push(500.0, 2000.0).unwrap();
    let trace = sample_trace(&joined, 0.05, 3, StreamLabel::Eve).unwrap();
    let half = trace.len() / 2;
    let separate = [
        sample_trace(&RateSchedule::constant(500.0, 200.0).unwrap(), 0.05, 4, StreamLabel::Eve).unwrap(),
        sample_trace(&RateSchedule::constant(500.0, 2000.0).unwrap(), 0.05, 5, StreamLabel::Eve).unwrap(),
    ];
    for (part, other) in [&trace.bins[..half], &trace.bins[half..]].into_iter().zip(&separate) {
        let a: Vec<f64> = part.iter().map(|&k| k as f64).collect();
        let b: Vec<f64> = other.bins.iter().map(|&k| k as f64).collect();
        let ((ma, va), (mb, vb)) = (mean_var(&a), mean_var(&b));
        let n = a.len() as f64;
        // standard errors of a Poisson mean and variance
        assert!((ma - mb).abs() < 4.0 * (2.0 * mb / n).sqrt(), "{ma} vs {mb}");
        assert!((va - vb).abs() < 4.0 * (2.0 * (2.0 * mb * mb + mb) / n).sqrt(), "{va} vs {vb}");
    }
}

#[test]
fn eve_levels_reproduce_calibration_separation() {
    // 4000/s signal at Eve on top of 8355/s of background
    let p = LinkParams { n_quantum: 4000.0, ..LinkParams::default() };
    let a = ChannelActors {
        alpha_e_sq: 1.0,
        eta_det_e: 1.0,
        n_class: 8355.0,
        ..ChannelActors::default()
    };
    let schedule = SymbolSchedule::from_bits(EncodingKind::Amplitude, &[true, false], 100.0, 0).unwrap();
    let (_, eve) = dual_trace(&p, &a, &schedule, 0.05, 9).unwrap();
    let c1 = eve.window_rate(0.0, 100.0).unwrap();
    let c0 = eve.window_rate(100.0, 200.0).unwrap();
    assert!((c1 - 12355.0).abs() < 50.0, "{c1}");
    assert!((c0 - 8355.0).abs() < 50.0, "{c0}");
    assert!(((c1 - c0) - 4000.0).abs() < 60.0);
}

#[test]
fn blocked_symbols_without_jamming() {
    let p = LinkParams { n_quantum: 1000.0, eta_det: 0.5, ..LinkParams::default() };
    let a = ChannelActors { alpha_e_sq: 0.5, eta_det_e: 1.0, ..ChannelActors::default() };
    let schedule = SymbolSchedule::from_bits(EncodingKind::Amplitude, &[false], 200.0, 0).unwrap();
    let (alice, eve) = dual_trace(&p, &a, &schedule, 0.05, 2).unwrap();
    assert!(eve.bins.iter().all(|&k| k == 0));
    let m = alice.window_rate(0.0, 200.0).unwrap() * 0.05;
    assert!((m - 2.0 * 0.5 * 1000.0 * 0.05).abs() < 0.5, "{m}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn identical_seed_gives_identical_traces(seed in any::<u64>(), n_class in 0.0..1e9f64, bits in prop::collection::vec(any::<bool>(), 1..12)) {
        let (p, a) = qlink_core::link_model::desk_preset();
        let a = ChannelActors { n_class, ..a };
        let schedule = SymbolSchedule::from_bits(EncodingKind::Phase, &bits, 0.2, 0).unwrap();
        let first = dual_trace(&p, &a, &schedule, 0.05, seed).unwrap();
        let second = dual_trace(&p, &a, &schedule, 0.05, seed).unwrap();
        prop_assert_eq!(first, second);
    }

    #[test]
    fn trace_length_matches_schedule(duration in 0.05..20.0f64, bin in 0.001..0.05f64) {
        let trace = sample_trace(&RateSchedule::constant(duration, 100.0).unwrap(), bin, 1, StreamLabel::Alice).unwrap();
        prop_assert!((trace.duration() - duration).abs() <= bin * (1.0 + 1e-9));
    }
}
