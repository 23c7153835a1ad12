//! Mean eye metrics at 1.2 and 8 bit/s for a given pair rate, rise time
//! and jitter, over `SEEDS` runs (default 20).
//!
//! cargo run --release -p qlink-core --example eye_tuning -- <n_quantum> <rise_ms> <jitter_ms> [bin_ms]

use qlink_core::analysis::{simulate_eye, EyeRun};
use qlink_core::link_model::{desk_preset, LinkParams};
use qlink_core::protocol_codec::{EncodingKind, TransitionModel};

fn main() {
    let args: Vec<f64> = std::env::args().skip(1).map(|a| a.parse().expect("numeric argument")).collect();
    let (n_quantum, rise, jitter) = (args[0], args[1] * 1e-3, args[2] * 1e-3);
    let bin_duration = args.get(3).copied().unwrap_or(5.0) * 1e-3;
    let seeds: u64 = std::env::var("SEEDS").ok().and_then(|s| s.parse().ok()).unwrap_or(20);
    let (p, a) = desk_preset();
    let p = LinkParams { n_quantum, ..p };
    let transition = TransitionModel::new(rise).unwrap().with_jitter(jitter).unwrap();
    for bit_rate in [1.2, 8.0] {
        let mut sum = [0.0; 3];
        let mut sq = [0.0; 3];
        for seed in 0..seeds {
            let run = EyeRun { kind: EncodingKind::Phase, bit_rate, transition, bin_duration, seed };
            let m = simulate_eye(&p, &a, &run, 20).unwrap().1.metrics;
            for (i, v) in [m.vertical_opening, m.horizontal_opening, m.transition_fraction].into_iter().enumerate() {
                sum[i] += v;
                sq[i] += v * v;
            }
        }
        let n = seeds as f64;
        let cols: Vec<String> = (0..3)
            .map(|i| {
                let m = sum[i] / n;
                format!("{:5.1}±{:4.1}", 100.0 * m, 100.0 * (sq[i] / n - m * m).max(0.0).sqrt())
            })
            .collect();
        println!("{bit_rate:>4} bit/s  V {}  H {}  Tr {}", cols[0], cols[1], cols[2]);
    }
}
