//! Flat `key=value` scenario files with dotted section prefixes.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use qlink_core::link_model::{ChannelActors, LinkParams};
use qlink_core::protocol_codec::{EncodingKind, TransitionModel};

use crate::error::ConfigError;

/// One recognised key. Keys without a default are required.
pub struct KeySpec {
    pub key: &'static str,
    pub unit: &'static str,
    pub help: &'static str,
    pub default: Option<&'static str>,
}

const fn key(key: &'static str, unit: &'static str, help: &'static str, default: Option<&'static str>) -> KeySpec {
    KeySpec { key, unit, help, default }
}

/// Every key a scenario may set, in manifest order.
pub const KEYS: &[KeySpec] = &[
    key("link.n_quantum", "1/s", "photon pairs per second of one source", None),
    key("link.eta_det", "1", "Alice's detection efficiency, in [0, 1]", None),
    key("link.t_meas", "s", "measurement window", None),
    key("link.phi", "rad", "pump phase", Some("0")),
    key("link.phi_a", "rad", "Alice's arm phase", Some("0")),
    key("link.phi_b", "rad", "Bob's arm phase", Some("0")),
    key("actors.alpha_sq", "1", "Bob's blocked fraction of the signal, in [0, 1]", Some("0")),
    key("actors.alpha_e_sq", "1", "fraction tapped by Eve, in [0, 1]", None),
    key("actors.eta_det_e", "1", "Eve's detection efficiency, in [0, 1]", None),
    key("actors.n_class", "1/s", "jamming photons per second", None),
    key("actors.eta_losses_sq", "1", "link loss fraction, in [0, 1]", Some("0")),
    key("encoding.kind", "-", "amplitude or phase", Some("amplitude")),
    key("encoding.bit_duration", "s", "duration of one bit", Some("1")),
    key("encoding.preamble_len", "bits", "alternating calibration bits before the payload", Some("8")),
    key("encoding.rise_time", "s", "modulator ramp between states", Some("0")),
    key("encoding.jitter", "s", "standard deviation of transition timing", Some("0")),
    key("payload.text", "-", "ASCII message for simulate and send-message (optional)", None),
    key("payload.image", "path", "PGM mask for simulate and send-image, relative to the scenario file (optional)", None),
    key("payload.pixel_pitch", "mm", "image pixel pitch", Some("0.2")),
    key("payload.scan_speed", "mm/s", "stage speed across the image", Some("1")),
    key("payload.dwell", "s", "detector dwell per image scan event", Some("0.05")),
    key("payload.eye_bit_rate", "bit/s", "bit rate of the eye pattern", Some("1.2")),
    key("payload.eye_repetitions", "-", "overlapped 3-bit windows per eye", Some("20")),
    key("sampling.bin_duration", "s", "count bin width", Some("0.05")),
    key("sampling.seed", "-", "base seed for every random draw", None),
    key("sampling.dark_rate", "1/s", "dark counts added to both detectors", Some("0")),
    key("sweep.ratios", "-", "comma-separated N_class/N_quantum values (default quarter decades 1..1e5)", None),
    key("sweep.seeds", "-", "independent runs per sweep point", Some("20")),
    key("sweep.block", "s", "averaging block of the SNR estimate (default link.t_meas)", None),
    key("sweep.n_blocks", "-", "blocks per SNR estimate", Some("20")),
    key("security.pump_rate", "1/s", "pump photons per second for the DFG check", Some("2e16")),
    key("audit.null_trials", "-", "random matrices in the image correlation null", Some("100000")),
    key("outputs.dir", "path", "output directory, overridden by --out", Some("qlink-out")),
];

/// Quarter-decade grid from 1 to 1e5, used when `sweep.ratios` is unset.
pub fn default_ratios() -> Vec<f64> {
    (0..=20).map(|k| 10f64.powf(k as f64 / 4.0)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Encoding {
    pub kind: EncodingKind,
    pub bit_duration: f64,
    pub preamble_len: usize,
    pub transition: TransitionModel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Payload {
    pub text: Option<String>,
    pub image: Option<PathBuf>,
    pub pixel_pitch: f64,
    pub scan_speed: f64,
    pub dwell: f64,
    pub eye_bit_rate: f64,
    pub eye_repetitions: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplingConfig {
    pub bin_duration: f64,
    pub seed: u64,
    pub dark_rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSettings {
    pub ratios: Vec<f64>,
    pub seeds: usize,
    /// Defaults to `link.t_meas`.
    pub block: f64,
    pub n_blocks: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub link: LinkParams,
    pub actors: ChannelActors,
    pub encoding: Encoding,
    pub payload: Payload,
    pub sampling: SamplingConfig,
    pub sweep: SweepSettings,
    pub pump_rate: f64,
    pub null_trials: usize,
    pub output_dir: PathBuf,
}

pub fn parse_scenario(path: &Path) -> Result<Scenario, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Read {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let base = path.parent().unwrap_or(Path::new(""));
    parse_scenario_str(&text, base)
}

/// Parses scenario text; relative image paths resolve against `base_dir`.
pub fn parse_scenario_str(text: &str, base_dir: &Path) -> Result<Scenario, ConfigError> {
    let raw = read_pairs(text)?;
    let missing: Vec<&str> = KEYS
        .iter()
        .filter(|k| k.default.is_none() && is_required(k.key) && !raw.contains_key(k.key))
        .map(|k| k.key)
        .collect();
    if !missing.is_empty() {
        return Err(ConfigError::Missing(missing.join(", ")));
    }
    let v = Values { raw: &raw };

    let link = LinkParams {
        n_quantum: v.f64("link.n_quantum")?,
        eta_det: v.f64("link.eta_det")?,
        t_meas: v.f64("link.t_meas")?,
        phi: v.f64("link.phi")?,
        phi_a: v.f64("link.phi_a")?,
        phi_b: v.f64("link.phi_b")?,
    };
    link.validate().map_err(ConfigError::from_core)?;
    let actors = ChannelActors {
        alpha_sq: v.f64("actors.alpha_sq")?,
        alpha_e_sq: v.f64("actors.alpha_e_sq")?,
        eta_det_e: v.f64("actors.eta_det_e")?,
        n_class: v.f64("actors.n_class")?,
        eta_losses_sq: v.f64("actors.eta_losses_sq")?,
    };
    actors.validate().map_err(ConfigError::from_core)?;

    let kind = v
        .str("encoding.kind")
        .parse::<EncodingKind>()
        .map_err(|_| v.type_error("encoding.kind", "amplitude or phase"))?;
    let jitter = v.non_negative("encoding.jitter")?;
    let transition = TransitionModel::new(v.non_negative("encoding.rise_time")?)
        .and_then(|t| t.with_jitter(jitter))
        .map_err(ConfigError::from_core)?;
    let encoding = Encoding {
        kind,
        bit_duration: v.positive("encoding.bit_duration")?,
        preamble_len: v.usize("encoding.preamble_len")?,
        transition,
    };
    if encoding.preamble_len < 2 {
        return Err(v.range("encoding.preamble_len", "needs at least one 1 and one 0"));
    }

    let image = match raw.get("payload.image") {
        Some(p) => {
            let path = base_dir.join(p);
            if !path.is_file() {
                return Err(ConfigError::MissingFile {
                    key: "payload.image",
                    path,
                });
            }
            Some(std::path::absolute(&path).unwrap_or(path))
        }
        None => None,
    };
    let payload = Payload {
        text: raw.get("payload.text").cloned(),
        image,
        pixel_pitch: v.positive("payload.pixel_pitch")?,
        scan_speed: v.positive("payload.scan_speed")?,
        dwell: v.positive("payload.dwell")?,
        eye_bit_rate: v.positive("payload.eye_bit_rate")?,
        eye_repetitions: v.usize("payload.eye_repetitions")?,
    };
    if let Some(t) = &payload.text {
        if t.is_empty() || !t.is_ascii() {
            return Err(v.range("payload.text", "must be non-empty ASCII"));
        }
    }

    let sampling = SamplingConfig {
        bin_duration: v.positive("sampling.bin_duration")?,
        seed: v.u64("sampling.seed")?,
        dark_rate: v.non_negative("sampling.dark_rate")?,
    };

    let ratios = match raw.get("sweep.ratios") {
        Some(list) => list
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<Result<Vec<f64>, _>>()
            .map_err(|_| v.type_error("sweep.ratios", "comma-separated numbers"))?,
        None => default_ratios(),
    };
    if ratios.is_empty() || ratios.iter().any(|r| !r.is_finite() || *r < 0.0) {
        return Err(v.range("sweep.ratios", "ratios must be finite and >= 0"));
    }
    let sweep = SweepSettings {
        ratios,
        seeds: v.usize("sweep.seeds")?,
        block: match raw.get("sweep.block") {
            Some(_) => v.positive("sweep.block")?,
            None => link.t_meas,
        },
        n_blocks: v.usize("sweep.n_blocks")?,
    };
    if sweep.seeds == 0 {
        return Err(v.range("sweep.seeds", "must be at least 1"));
    }

    Ok(Scenario {
        link,
        actors,
        encoding,
        payload,
        sampling,
        sweep,
        pump_rate: v.positive("security.pump_rate")?,
        null_trials: v.usize("audit.null_trials")?,
        output_dir: PathBuf::from(v.str("outputs.dir")),
    })
}

/// Keys without a default that may still be left out.
fn is_required(key: &str) -> bool {
    !matches!(key, "payload.text" | "payload.image" | "sweep.ratios" | "sweep.block")
}

fn read_pairs(text: &str) -> Result<BTreeMap<String, String>, ConfigError> {
    let mut raw = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let (k, value) = trimmed.split_once('=').ok_or_else(|| ConfigError::Syntax {
            line: i + 1,
            text: trimmed.to_string(),
        })?;
        let k = k.trim();
        if !KEYS.iter().any(|spec| spec.key == k) {
            return Err(ConfigError::UnknownKey(k.to_string()));
        }
        if raw.insert(k.to_string(), value.trim().to_string()).is_some() {
            return Err(ConfigError::Duplicate(k.to_string()));
        }
    }
    Ok(raw)
}

struct Values<'a> {
    raw: &'a BTreeMap<String, String>,
}

impl Values<'_> {
    fn str(&self, key: &'static str) -> &str {
        match self.raw.get(key) {
            Some(v) => v,
            None => spec(key).default.unwrap_or(""),
        }
    }

    fn type_error(&self, key: &'static str, expected: &'static str) -> ConfigError {
        ConfigError::Type {
            key,
            value: self.str(key).to_string(),
            expected,
        }
    }

    fn range(&self, key: &'static str, reason: &'static str) -> ConfigError {
        ConfigError::Range {
            key: key.to_string(),
            value: self.str(key).to_string(),
            reason,
        }
    }

    fn f64(&self, key: &'static str) -> Result<f64, ConfigError> {
        match self.str(key).parse::<f64>() {
            Ok(x) if x.is_finite() => Ok(x),
            Ok(_) => Err(self.range(key, "must be finite")),
            Err(_) => Err(self.type_error(key, "a number")),
        }
    }

    fn positive(&self, key: &'static str) -> Result<f64, ConfigError> {
        let x = self.f64(key)?;
        if x > 0.0 {
            Ok(x)
        } else {
            Err(self.range(key, "must be > 0"))
        }
    }

    fn non_negative(&self, key: &'static str) -> Result<f64, ConfigError> {
        let x = self.f64(key)?;
        if x >= 0.0 {
            Ok(x)
        } else {
            Err(self.range(key, "must be >= 0"))
        }
    }

    fn u64(&self, key: &'static str) -> Result<u64, ConfigError> {
        self.str(key)
            .parse::<u64>()
            .map_err(|_| self.type_error(key, "an unsigned integer"))
    }

    fn usize(&self, key: &'static str) -> Result<usize, ConfigError> {
        self.str(key)
            .parse::<usize>()
            .map_err(|_| self.type_error(key, "an unsigned integer"))
    }
}

fn spec(key: &str) -> &'static KeySpec {
    KEYS.iter().find(|k| k.key == key).expect("key is listed in KEYS")
}

/// Fully resolved scenario as a scenario file. Output location is left
/// out so reruns from the manifest reproduce it byte for byte.
pub fn manifest(s: &Scenario, subcommand: &str) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# qlink {subcommand}");
    let mut put = |k: &str, v: String| {
        let _ = writeln!(out, "{k}={v}");
    };
    put("link.n_quantum", s.link.n_quantum.to_string());
    put("link.eta_det", s.link.eta_det.to_string());
    put("link.t_meas", s.link.t_meas.to_string());
    put("link.phi", s.link.phi.to_string());
    put("link.phi_a", s.link.phi_a.to_string());
    put("link.phi_b", s.link.phi_b.to_string());
    put("actors.alpha_sq", s.actors.alpha_sq.to_string());
    put("actors.alpha_e_sq", s.actors.alpha_e_sq.to_string());
    put("actors.eta_det_e", s.actors.eta_det_e.to_string());
    put("actors.n_class", s.actors.n_class.to_string());
    put("actors.eta_losses_sq", s.actors.eta_losses_sq.to_string());
    put("encoding.kind", s.encoding.kind.as_str().to_string());
    put("encoding.bit_duration", s.encoding.bit_duration.to_string());
    put("encoding.preamble_len", s.encoding.preamble_len.to_string());
    put("encoding.rise_time", s.encoding.transition.rise_time.to_string());
    put("encoding.jitter", s.encoding.transition.jitter.to_string());
    if let Some(t) = &s.payload.text {
        put("payload.text", t.clone());
    }
    if let Some(p) = &s.payload.image {
        put("payload.image", p.display().to_string());
    }
    put("payload.pixel_pitch", s.payload.pixel_pitch.to_string());
    put("payload.scan_speed", s.payload.scan_speed.to_string());
    put("payload.dwell", s.payload.dwell.to_string());
    put("payload.eye_bit_rate", s.payload.eye_bit_rate.to_string());
    put("payload.eye_repetitions", s.payload.eye_repetitions.to_string());
    put("sampling.bin_duration", s.sampling.bin_duration.to_string());
    put("sampling.seed", s.sampling.seed.to_string());
    put("sampling.dark_rate", s.sampling.dark_rate.to_string());
    let ratios: Vec<String> = s.sweep.ratios.iter().map(f64::to_string).collect();
    put("sweep.ratios", ratios.join(","));
    put("sweep.seeds", s.sweep.seeds.to_string());
    put("sweep.block", s.sweep.block.to_string());
    put("sweep.n_blocks", s.sweep.n_blocks.to_string());
    put("security.pump_rate", s.pump_rate.to_string());
    put("audit.null_trials", s.null_trials.to_string());
    out
}

/// Key reference for `--help`.
pub fn key_help() -> String {
    let mut out = String::from("Scenario keys (key [unit] description; * = required):\n");
    for k in KEYS {
        let required = if k.default.is_none() && is_required(k.key) { "*" } else { " " };
        let default = k.default.map(|d| format!(" (default {d})")).unwrap_or_default();
        let _ = writeln!(out, " {required} {} [{}] {}{default}", k.key, k.unit, k.help);
    }
    out
}
