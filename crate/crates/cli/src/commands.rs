//! Subcommand bodies. Each returns its files in write order plus a short
//! stdout summary; nothing here touches the filesystem except image input.

use std::fmt::Write as _;
use std::path::Path;

use qlink_core::analysis::{
    classical_crossing, correlation, derive_seed, eye_csv, eye_metrics_csv, random_correlation_baseline,
    simulate_eye, sweep_csv, sweep_snr_with, EyeRun, NoiseReference, SweepConfig,
};
use qlink_core::count_engine::{dual_trace_timeline, timing_rng, CountTrace, Sampling};
use qlink_core::link_model::{self, DfgReport, ThresholdForm};
use qlink_core::protocol_codec::{
    apply_transition_jittered, bits_to_bytes, decode_trace, encode_text_with_preamble, image_schedule, read_pgm,
    reconstruct_image, write_pgm_p2, BitLayout, DecodedBits, ImageRaster,
};
use qlink_core::Error;

use crate::error::{ConfigError, RunError};
use crate::scenario::Scenario;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    SweepSnr,
    SendMessage,
    SendImage,
    Eye,
    SecurityCheck,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::SweepSnr => "sweep-snr",
            Command::SendMessage => "send-message",
            Command::SendImage => "send-image",
            Command::Eye => "eye",
            Command::SecurityCheck => "security-check",
        }
    }
}

/// Files produced by one run, in write order, and the stdout summary.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Output {
    pub files: Vec<(String, Vec<u8>)>,
    pub summary: String,
}

impl Output {
    fn file(&mut self, name: &str, bytes: impl Into<Vec<u8>>) {
        self.files.push((name.to_string(), bytes.into()));
    }
}

pub fn run(command: Command, s: &Scenario) -> Result<Output, RunError> {
    match command {
        Command::Simulate => simulate(s),
        Command::SweepSnr => sweep(s),
        Command::SendMessage => send_message(s),
        Command::SendImage => send_image(s),
        Command::Eye => eye(s),
        Command::SecurityCheck => security_check(s),
    }
}

fn sampling(s: &Scenario) -> Sampling {
    Sampling {
        bin_duration: s.sampling.bin_duration,
        seed: s.sampling.seed,
        dark_rate: s.sampling.dark_rate,
    }
}

struct MessageRun {
    text: String,
    reference: Vec<bool>,
    alice: CountTrace,
    eve: CountTrace,
    alice_decoded: Result<DecodedBits, Error>,
    eve_decoded: Result<DecodedBits, Error>,
}

fn message_run(s: &Scenario) -> Result<MessageRun, RunError> {
    let text = s
        .payload
        .text
        .clone()
        .ok_or_else(|| ConfigError::Invalid("payload.text is required for this subcommand".into()))?;
    let schedule = encode_text_with_preamble(&text, s.encoding.kind, s.encoding.bit_duration, s.encoding.preamble_len)?;
    let timeline = apply_transition_jittered(&schedule, &s.encoding.transition, &mut timing_rng(s.sampling.seed))?;
    let (alice, eve) = dual_trace_timeline(&s.link, &s.actors, &timeline, &sampling(s))?;
    let layout = BitLayout::for_schedule(&schedule);
    let decode = |trace: &CountTrace| match decode_trace(trace, &layout, 0.0) {
        Err(e @ Error::Calibration { .. }) => Ok(Err(e)),
        other => other.map(Ok),
    };
    Ok(MessageRun {
        reference: schedule.payload_bits(),
        alice_decoded: decode(&alice)?,
        eve_decoded: decode(&eve)?,
        text,
        alice,
        eve,
    })
}

fn bit_string(bits: &[bool]) -> String {
    bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

fn decoded_line(party: &str, decoded: &Result<DecodedBits, Error>, reference: &[bool]) -> String {
    match decoded {
        Ok(d) => {
            let errors = d.bit_errors(reference);
            let text = String::from_utf8_lossy(&bits_to_bytes(&d.bits)).into_owned();
            format!(
                "{party}: decoded {text:?}, bit errors {errors}, BER {}\n",
                errors as f64 / reference.len() as f64
            )
        }
        Err(e) => format!("{party}: {e}\n"),
    }
}

fn message_report(m: &MessageRun) -> String {
    let mut out = format!("message: {:?}\nbits: {}\n", m.text, m.reference.len());
    out.push_str(&decoded_line("alice", &m.alice_decoded, &m.reference));
    out.push_str(&decoded_line("eve", &m.eve_decoded, &m.reference));
    out
}

fn simulate(s: &Scenario) -> Result<Output, RunError> {
    if s.payload.text.is_none() && s.payload.image.is_some() {
        return image_run(s, false);
    }
    let m = message_run(s)?;
    let mut out = Output::default();
    out.file("alice_trace.csv", m.alice.to_csv());
    out.file("eve_trace.csv", m.eve.to_csv());
    out.summary = message_report(&m);
    out.file("decoded.txt", out.summary.clone());
    Ok(out)
}

fn send_message(s: &Scenario) -> Result<Output, RunError> {
    let m = message_run(s)?;
    let mut out = Output::default();
    out.file("reference_bits.txt", format!("{}\n", bit_string(&m.reference)));
    for (party, decoded) in [("alice", &m.alice_decoded), ("eve", &m.eve_decoded)] {
        let body = match decoded {
            Ok(d) => format!("{}\n", bit_string(&d.bits)),
            Err(e) => format!("{e}\n"),
        };
        out.file(&format!("{party}_bits.txt"), body);
        if let Ok(d) = decoded {
            out.file(&format!("{party}_soft.csv"), d.soft_scores_csv());
        }
    }
    out.file("alice_trace.csv", m.alice.to_csv());
    out.file("eve_trace.csv", m.eve.to_csv());
    out.summary = message_report(&m);
    out.file("report.txt", out.summary.clone());
    Ok(out)
}

fn read_image(path: &Path) -> Result<ndarray::Array2<f64>, RunError> {
    let bytes = std::fs::read(path).map_err(|source| RunError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(read_pgm(&bytes)?)
}

/// Seed word of the correlation null, kept apart from the trace seeds.
const NULL_SEED_WORD: u64 = 0x6e75_6c6c;

fn image_run(s: &Scenario, audit: bool) -> Result<Output, RunError> {
    let path = s
        .payload
        .image
        .as_ref()
        .ok_or_else(|| ConfigError::Invalid("payload.image is required for this subcommand".into()))?;
    let mask = read_image(path)?;
    let raster = ImageRaster::new(mask.clone(), s.payload.pixel_pitch, s.payload.scan_speed)?;
    let scan = image_schedule(&raster, s.payload.dwell)?;
    let (alice, eve) = dual_trace_timeline(&s.link, &s.actors, &scan.timeline(), &sampling(s))?;
    let alice_image = reconstruct_image(&alice, &scan.geometry)?;
    let eve_image = match reconstruct_image(&eve, &scan.geometry) {
        Err(Error::Calibration { .. }) => None,
        other => Some(other?),
    };

    let mut out = Output::default();
    out.file("mask.pgm", write_pgm_p2(&mask));
    out.file("alice.pgm", write_pgm_p2(&alice_image));
    if let Some(img) = &eve_image {
        out.file("eve.pgm", write_pgm_p2(img));
    }
    if !audit {
        out.file("alice_trace.csv", alice.to_csv());
        out.file("eve_trace.csv", eve.to_csv());
    }

    let mae = |img: &ndarray::Array2<f64>| (img - &mask).mapv(f64::abs).mean().unwrap_or(f64::NAN);
    let mut summary = format!("alice: MAE {}\n", mae(&alice_image));
    match &eve_image {
        Some(img) => {
            let _ = writeln!(summary, "eve: MAE {}", mae(img));
        }
        None => summary.push_str("eve: reference levels coincide, no reconstruction\n"),
    }

    if audit {
        let null = random_correlation_baseline(&mask, s.null_trials, derive_seed(s.sampling.seed, &[NULL_SEED_WORD]))?;
        let mut csv = String::from("party,correlation,inside_null_99,mae\n");
        for (party, img) in [("alice", Some(&alice_image)), ("eve", eve_image.as_ref())] {
            let (r, inside) = match img.map(|i| correlation(i, &mask)) {
                Some(Ok(r)) => (r.to_string(), null.contains(r).to_string()),
                Some(Err(Error::ZeroVariance(_))) | None => ("undefined".to_string(), "true".to_string()),
                Some(Err(e)) => return Err(e.into()),
            };
            let m = img.map_or("undefined".to_string(), |i| mae(i).to_string());
            let _ = writeln!(csv, "{party},{r},{inside},{m}");
            let _ = writeln!(summary, "{party}: correlation {r}, inside null 99% band: {inside}");
        }
        out.file("audit.csv", csv);
        out.file(
            "null_distribution.csv",
            format!(
                "n_trials,mean,std,lower,upper\n{},{},{},{},{}\n",
                null.n_trials, null.mean, null.std, null.lower, null.upper
            ),
        );
    }
    out.file("report.txt", summary.clone());
    out.summary = summary;
    Ok(out)
}

fn send_image(s: &Scenario) -> Result<Output, RunError> {
    image_run(s, true)
}

fn eye(s: &Scenario) -> Result<Output, RunError> {
    let run = EyeRun {
        kind: s.encoding.kind,
        bit_rate: s.payload.eye_bit_rate,
        transition: s.encoding.transition,
        bin_duration: s.sampling.bin_duration,
        seed: s.sampling.seed,
    };
    let (trace, eye) = simulate_eye(&s.link, &s.actors, &run, s.payload.eye_repetitions)?;
    let mut out = Output::default();
    out.file("alice_trace.csv", trace.to_csv());
    out.file("eye.csv", eye_csv(&eye));
    out.file("eye_metrics.csv", eye_metrics_csv(&eye));
    let m = eye.metrics;
    out.summary = format!(
        "vertical opening: {}\nhorizontal opening: {}\ntransition fraction: {}\n",
        m.vertical_opening, m.horizontal_opening, m.transition_fraction
    );
    Ok(out)
}

fn sweep(s: &Scenario) -> Result<Output, RunError> {
    let seeds: Vec<u64> = (0..s.sweep.seeds as u64).map(|k| derive_seed(s.sampling.seed, &[k])).collect();
    let cfg = SweepConfig {
        block: s.sweep.block,
        n_blocks: s.sweep.n_blocks,
        bin_duration: s.sampling.bin_duration,
        noise: NoiseReference::Quadrature,
    };
    let rows = sweep_snr_with(&s.link, &s.actors, &s.sweep.ratios, &seeds, &cfg)?;
    let mut out = Output::default();
    out.file("sweep.csv", sweep_csv(&rows));
    out.summary = match classical_crossing(&rows) {
        Some(x) => format!("classical SNR crosses 1 at ratio {x}\n"),
        None => "classical SNR does not cross 1 in the swept range\n".to_string(),
    };
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecurityReport {
    pub threshold: f64,
    pub exact_threshold: f64,
    pub ratio: f64,
    pub secure: bool,
    pub c_comm: f64,
    pub snr_eve: f64,
    pub dfg: DfgReport,
}

pub fn security_report(s: &Scenario) -> Result<SecurityReport, RunError> {
    let (p, a) = (&s.link, &s.actors);
    if p.n_quantum <= 0.0 {
        return Err(ConfigError::Range {
            key: "link.n_quantum".into(),
            value: p.n_quantum.to_string(),
            reason: "security-check needs a pair rate > 0",
        }
        .into());
    }
    Ok(SecurityReport {
        threshold: link_model::security_threshold(p, a, ThresholdForm::Approximate)?,
        exact_threshold: link_model::security_threshold(p, a, ThresholdForm::Exact)?,
        ratio: a.n_class / p.n_quantum,
        secure: link_model::is_secure(p, a)?,
        c_comm: link_model::c_comm(p, a)?,
        snr_eve: link_model::snr_eve(p, a)?,
        dfg: link_model::dfg_check(s.pump_rate, p, a)?,
    })
}

pub fn format_security(r: &SecurityReport) -> String {
    format!(
        "secure: {}, threshold ratio: {}\n\
         exact threshold ratio: {}\n\
         actual ratio: {}\n\
         C_comm: {}\n\
         snr_eve: {}\n\
         dfg negligible: {} (dfg rate {} 1/s, quantum rate {} 1/s)\n",
        r.secure,
        r.threshold,
        r.exact_threshold,
        r.ratio,
        r.c_comm,
        r.snr_eve,
        r.dfg.negligible,
        r.dfg.c_dfg_rate,
        r.dfg.c_quantum_rate
    )
}

fn security_check(s: &Scenario) -> Result<Output, RunError> {
    let text = format_security(&security_report(s)?);
    let mut out = Output::default();
    out.file("security.txt", text.clone());
    out.summary = text;
    Ok(out)
}
