use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;

use proptest::prelude::*;
use proptest::strategy::ValueTree;
use qlink_cli::{format_security, parse_scenario_str, security_report, MANIFEST_NAME};
use qlink_core::link_model::is_secure;

const QLINK: &str = env!("CARGO_BIN_EXE_qlink");

fn scenarios() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn qlink(args: &[&str]) -> std::process::Output {
    Command::new(QLINK).args(args).env("QLINK_WORKERS", "2").output().unwrap()
}

fn run_into(sub: &str, scenario: &Path, out: &Path, extra: &[&str]) -> std::process::Output {
    let mut args = vec![sub, "--scenario", scenario.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    let o = qlink(&args);
    assert!(o.status.success(), "{sub}: {}", String::from_utf8_lossy(&o.stderr));
    o
}

fn read_dir(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect()
}

/// Small, fast variants of the shipped scenarios.
fn quick_scenario(dir: &Path, name: &str, extra: &str) -> PathBuf {
    let text = std::fs::read_to_string(scenarios().join(name)).unwrap();
    let image = scenarios().join("ring.pgm");
    let text = text.replace("payload.image=ring.pgm", &format!("payload.image={}", image.display()));
    // keys in `extra` replace the shipped values
    let overridden: Vec<&str> = extra.lines().filter_map(|l| l.split_once('=')).map(|(k, _)| k).collect();
    let kept: String = text
        .lines()
        .filter(|l| !l.split_once('=').is_some_and(|(k, _)| overridden.contains(&k)))
        .map(|l| format!("{l}\n"))
        .collect();
    let path = dir.join(name);
    std::fs::write(&path, format!("{kept}{extra}")).unwrap();
    path
}

fn quick_runs(dir: &Path) -> Vec<(&'static str, PathBuf)> {
    vec![
        ("simulate", quick_scenario(dir, "message.scenario", "")),
        ("send-message", quick_scenario(dir, "message.scenario", "")),
        ("send-image", quick_scenario(dir, "image.scenario", "audit.null_trials=500\n")),
        ("eye", quick_scenario(dir, "eye.scenario", "")),
        ("sweep-snr", quick_scenario(dir, "sweep.scenario", "sweep.ratios=0,10,100,1000\nsweep.seeds=3\n")),
        ("security-check", quick_scenario(dir, "calibration.scenario", "")),
    ]
}

#[test]
fn every_subcommand_is_byte_identical_on_rerun() {
    let tmp = tempfile::tempdir().unwrap();
    for (sub, scenario) in quick_runs(tmp.path()) {
        let a = tmp.path().join(format!("{sub}-a"));
        let b = tmp.path().join(format!("{sub}-b"));
        let first = run_into(sub, &scenario, &a, &[]);
        let second = run_into(sub, &scenario, &b, &[]);
        assert_eq!(first.stdout, second.stdout, "{sub}");
        let files = read_dir(&a);
        assert!(files.contains_key(MANIFEST_NAME), "{sub}");
        assert_eq!(files, read_dir(&b), "{sub}");
    }
}

#[test]
fn rerunning_from_the_manifest_reproduces_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    for (sub, scenario) in quick_runs(tmp.path()) {
        let first = tmp.path().join(format!("{sub}-first"));
        let replay = tmp.path().join(format!("{sub}-replay"));
        run_into(sub, &scenario, &first, &["--seed", "99"]);
        run_into(sub, &first.join(MANIFEST_NAME), &replay, &[]);
        assert_eq!(read_dir(&first), read_dir(&replay), "{sub}");
    }
}

#[test]
fn seed_override_changes_draws_and_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let scenario = quick_scenario(tmp.path(), "message.scenario", "");
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    run_into("simulate", &scenario, &a, &[]);
    run_into("simulate", &scenario, &b, &["--seed", "8"]);
    let (a, b) = (read_dir(&a), read_dir(&b));
    assert_ne!(a["alice_trace.csv"], b["alice_trace.csv"]);
    assert!(String::from_utf8_lossy(&b[MANIFEST_NAME]).contains("sampling.seed=8\n"));
}

#[test]
fn calibration_scenario_reports_threshold_100() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run_into("security-check", &scenarios().join("calibration.scenario"), tmp.path(), &[]);
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert!(stdout.starts_with("secure: true, threshold ratio: 100\n"), "{stdout}");
    assert!(stdout.contains("exact threshold ratio: 99.5\n"), "{stdout}");
}

#[test]
fn exit_codes_separate_config_and_runtime_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let empty = tmp.path().join("empty.scenario");
    std::fs::write(&empty, "").unwrap();
    let o = qlink(&["simulate", "--scenario", empty.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("sampling.seed"));

    let bad = quick_scenario(tmp.path(), "calibration.scenario", "actors.alpha_sq=1.5\n");
    let o = qlink(&["security-check", "--scenario", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("actors.alpha_sq"));

    // a block that is not a whole number of bins fails inside the estimator
    let odd = quick_scenario(tmp.path(), "sweep.scenario", "sweep.block=0.07\nsweep.ratios=1\nsweep.seeds=1\n");
    let out = tmp.path().join("odd");
    let o = qlink(&["sweep-snr", "--scenario", odd.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

fn fuzzed_scenario() -> impl Strategy<Value = String> {
    (
        1.0..1e6f64,
        0.0..=1.0f64,
        1e-3..10.0f64,
        0.0..=1.0f64,
        0.0..=1.0f64,
        0.0..=1.0f64,
        prop_oneof![0.0..1e3f64, 1e3..1e12f64],
        any::<u64>(),
    )
        .prop_map(|(n, eta, t, alpha, alpha_e, eta_e, ratio, seed)| {
            format!(
                "link.n_quantum={n}\nlink.eta_det={eta}\nlink.t_meas={t}\nactors.alpha_sq={alpha}\n\
                 actors.alpha_e_sq={alpha_e}\nactors.eta_det_e={eta_e}\nactors.n_class={}\nsampling.seed={seed}\n",
                ratio * n
            )
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn security_check_agrees_with_the_link_model(text in fuzzed_scenario()) {
        let s = parse_scenario_str(&text, Path::new(".")).unwrap();
        let report = security_report(&s).unwrap();
        let expected = is_secure(&s.link, &s.actors).unwrap();
        prop_assert_eq!(report.secure, expected);
        let printed = format_security(&report);
        let verdict = format!("secure: {expected},");
        prop_assert!(printed.starts_with(&verdict));
    }
}

#[test]
fn security_check_binary_matches_library_on_fuzzed_files() {
    let tmp = tempfile::tempdir().unwrap();
    let mut runner = proptest::test_runner::TestRunner::deterministic();
    for i in 0..20 {
        let text = fuzzed_scenario().new_tree(&mut runner).unwrap().current();
        let path = tmp.path().join(format!("fuzz{i}.scenario"));
        std::fs::write(&path, &text).unwrap();
        let out = tmp.path().join(format!("fuzz{i}"));
        let o = run_into("security-check", &path, &out, &[]);
        let s = parse_scenario_str(&text, Path::new(".")).unwrap();
        assert_eq!(String::from_utf8(o.stdout).unwrap(), format_security(&security_report(&s).unwrap()));
    }
}
