//! Rate equations of the two-source induced-coherence link.
//!
//! Alice owns both photon-pair sources and detects only the idler. Bob acts
//! on the signal mode (amplitude `alpha_sq` or phase `phi_b`), an
//! eavesdropper taps a fraction `alpha_e_sq` of the signal mode, and a
//! classical jamming source adds `n_class` uncorrelated photons per second
//! to that same mode.
//!
//! Every function here is a pure function of its inputs. Probabilities are
//! stored as squared amplitudes; the amplitude accessors take the square
//! root on demand.

use crate::error::{check_finite, check_non_negative, check_positive, check_probability, Result};
use crate::Error;

/// Physical parameters of the link shared by Alice and Bob.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkParams {
    /// Pairs generated per second by each source (1/s).
    pub n_quantum: f64,
    /// Pump phase accumulated at the second source (rad).
    pub phi: f64,
    /// Idler-path phase (rad).
    pub phi_a: f64,
    /// Signal-path phase set by Bob (rad).
    pub phi_b: f64,
    /// Alice-side detection efficiency, propagation losses included.
    pub eta_det: f64,
    /// Integration time of one measurement (s).
    pub t_meas: f64,
}

impl Default for LinkParams {
    fn default() -> Self {
        Self {
            n_quantum: 4000.0,
            phi: 0.0,
            phi_a: 0.0,
            phi_b: 0.0,
            eta_det: 1.0,
            t_meas: 0.05,
        }
    }
}

impl LinkParams {
    pub fn validate(&self) -> Result<()> {
        check_non_negative("link.n_quantum", self.n_quantum)?;
        check_finite("link.phi", self.phi)?;
        check_finite("link.phi_a", self.phi_a)?;
        check_finite("link.phi_b", self.phi_b)?;
        check_probability("link.eta_det", self.eta_det)?;
        check_positive("link.t_meas", self.t_meas)
    }

    /// Interferometric phase `phi - phi_a - phi_b`.
    pub fn delta_phi(&self) -> f64 {
        self.phi - self.phi_a - self.phi_b
    }
}

/// State of everything acting on the signal mode between the two sources.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ChannelActors {
    /// Probability that Bob deviates the signal mode out of the link.
    pub alpha_sq: f64,
    /// Probability that the eavesdropper taps the signal mode.
    pub alpha_e_sq: f64,
    /// Eavesdropper detection efficiency.
    pub eta_det_e: f64,
    /// Jamming photons per second injected into the signal mode (1/s).
    pub n_class: f64,
    /// Probability of leakage out of the returning link.
    pub eta_losses_sq: f64,
}

impl ChannelActors {
    pub fn validate(&self) -> Result<()> {
        check_probability("actors.alpha_sq", self.alpha_sq)?;
        check_probability("actors.alpha_e_sq", self.alpha_e_sq)?;
        check_probability("actors.eta_det_e", self.eta_det_e)?;
        check_non_negative("actors.n_class", self.n_class)?;
        check_probability("actors.eta_losses_sq", self.eta_losses_sq)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha_sq.sqrt()
    }

    pub fn alpha_e(&self) -> f64 {
        self.alpha_e_sq.sqrt()
    }

    pub fn eta_losses(&self) -> f64 {
        self.eta_losses_sq.sqrt()
    }
}

fn validate(p: &LinkParams, a: &ChannelActors) -> Result<()> {
    p.validate()?;
    a.validate()
}

fn require_pairs(p: &LinkParams) -> Result<()> {
    if p.n_quantum > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain {
            field: "link.n_quantum",
            value: p.n_quantum,
            reason: "must be > 0 for jamming-ratio quantities",
        })
    }
}

/// Expected idler detection rate at Alice (1/s).
///
/// `2 eta N [1 + sqrt(1-alpha^2) sqrt(1-alpha_E^2) cos(dphi)]`. The jamming
/// rate never enters: the idler is uncorrelated with the jamming light.
pub fn alice_rate(p: &LinkParams, a: &ChannelActors) -> Result<f64> {
    validate(p, a)?;
    let visibility = (1.0 - a.alpha_sq).sqrt() * (1.0 - a.alpha_e_sq).sqrt();
    let rate = 2.0 * p.eta_det * p.n_quantum * (1.0 + visibility * p.delta_phi().cos());
    Ok(rate.max(0.0))
}

/// Expected signal-mode detection rate at the eavesdropper (1/s).
/// Phase-blind.
pub fn eve_rate(p: &LinkParams, a: &ChannelActors) -> Result<f64> {
    validate(p, a)?;
    Ok(a.eta_det_e * a.alpha_e_sq * (p.n_quantum * (1.0 - a.alpha_sq) + a.n_class))
}

/// Eavesdropper counts per measurement window for the two amplitude levels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelCounts {
    /// Bob leaves the path open (`alpha^2 = 0`).
    pub c1: f64,
    /// Bob blocks the path (`alpha^2 = 1`).
    pub c0: f64,
}

impl LevelCounts {
    pub fn separation(&self) -> f64 {
        self.c1 - self.c0
    }
}

/// Evaluates both amplitude levels at Eve; `a.alpha_sq` is ignored.
pub fn eve_level_counts(p: &LinkParams, a: &ChannelActors) -> Result<LevelCounts> {
    validate(p, a)?;
    let scale = a.eta_det_e * a.alpha_e_sq * p.t_meas;
    Ok(LevelCounts {
        c1: scale * (p.n_quantum + a.n_class),
        c0: scale * a.n_class,
    })
}

/// Counts separating the two communication levels at Eve over `t_meas`.
pub fn c_comm(p: &LinkParams, a: &ChannelActors) -> Result<f64> {
    validate(p, a)?;
    Ok(a.eta_det_e * p.n_quantum * a.alpha_e_sq * p.t_meas)
}

/// Signal-to-noise ratio of the eavesdropper, `sqrt(C_comm) / sqrt(1 + 2 N_class/N_quantum)`.
///
/// Signal is `C_comm`, noise is the quadrature sum of the shot noise on both
/// levels.
pub fn snr_eve(p: &LinkParams, a: &ChannelActors) -> Result<f64> {
    require_pairs(p)?;
    let c = c_comm(p, a)?;
    Ok(c.sqrt() / (1.0 + 2.0 * a.n_class / p.n_quantum).sqrt())
}

/// Alice's SNR for amplitude keying in the presence of a tap.
pub fn snr_alice_amplitude(p: &LinkParams, a: &ChannelActors) -> Result<f64> {
    validate(p, a)?;
    let v = (1.0 - a.alpha_e_sq).sqrt();
    Ok((2.0 * p.eta_det * p.n_quantum * p.t_meas).sqrt() * v / (2.0 + v).sqrt())
}

/// Alice's SNR for phase keying in the presence of a tap.
pub fn snr_alice_phase(p: &LinkParams, a: &ChannelActors) -> Result<f64> {
    validate(p, a)?;
    let v = (1.0 - a.alpha_e_sq).sqrt();
    Ok(2.0 * (p.eta_det * p.n_quantum * p.t_meas * v).sqrt())
}

/// Which form of the minimum jamming ratio to report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ThresholdForm {
    /// `C_comm / 2`.
    #[default]
    Approximate,
    /// `(C_comm - 1) / 2`, floored at zero. `snr_eve` equals one exactly
    /// at this ratio whenever `C_comm >= 1`.
    Exact,
}

/// Minimum `N_class / N_quantum` that hides the message from the tap.
pub fn security_threshold(p: &LinkParams, a: &ChannelActors, form: ThresholdForm) -> Result<f64> {
    let c = c_comm(p, a)?;
    Ok(match form {
        ThresholdForm::Approximate => c / 2.0,
        ThresholdForm::Exact => ((c - 1.0) / 2.0).max(0.0),
    })
}

/// True when the eavesdropper SNR is at most one (boundary included).
pub fn is_secure(p: &LinkParams, a: &ChannelActors) -> Result<bool> {
    require_pairs(p)?;
    let c = c_comm(p, a)?;
    // snr^2 <= 1 without the square roots; the slack absorbs the rounding
    // of n_class = ratio * n_quantum at the boundary
    Ok(c <= (1.0 + 2.0 * a.n_class / p.n_quantum) * (1.0 + 8.0 * f64::EPSILON))
}

/// Outcome of the low-gain validity check for difference-frequency
/// generation seeded by the jamming light in the second crystal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DfgReport {
    /// Idler rate at Alice produced by DFG (1/s).
    pub c_dfg_rate: f64,
    /// Idler rate at Alice from spontaneous pairs of one source (1/s).
    pub c_quantum_rate: f64,
    /// Jamming photon flux stays below the pump photon flux, which bounds
    /// `c_dfg_rate < c_quantum_rate` for every tap setting.
    pub negligible: bool,
}

/// Low-gain check. The conversion efficiency is inferred as
/// `N_quantum / pump_rate`.
pub fn dfg_check(pump_rate: f64, p: &LinkParams, a: &ChannelActors) -> Result<DfgReport> {
    check_positive("pump_rate", pump_rate)?;
    validate(p, a)?;
    let conversion = p.n_quantum / pump_rate;
    let path = 1.0 - a.alpha();
    let c_dfg_rate =
        p.eta_det * conversion * (pump_rate * a.n_class).sqrt() * (1.0 - a.alpha_e()) * path;
    let c_quantum_rate = p.eta_det * p.n_quantum * path;
    Ok(DfgReport {
        c_dfg_rate,
        c_quantum_rate,
        negligible: a.n_class < pump_rate,
    })
}

/// Alice's rate when the returning link leaks `eta_losses^2` of the mode.
pub fn lossy_alice_rate(p: &LinkParams, a: &ChannelActors) -> Result<f64> {
    validate(p, a)?;
    let rate = 2.0 * p.eta_det * p.n_quantum * (1.0 + lossy_visibility(a) * p.delta_phi().cos());
    Ok(rate.max(0.0))
}

/// Fringe visibility `sqrt(1 - eta_losses^2)` of the lossy link.
pub fn lossy_visibility(a: &ChannelActors) -> f64 {
    (1.0 - a.eta_losses_sq).sqrt()
}

/// Desk-scale operating point: 4000 eavesdropper-side signal photons per
/// second and `C_comm = 200` at 50 ms, with half the signal tapped so Alice
/// keeps a fringe of visibility `1/sqrt(2)`.
pub fn desk_preset() -> (LinkParams, ChannelActors) {
    (
        LinkParams {
            n_quantum: 8000.0,
            eta_det: 0.25,
            t_meas: 0.05,
            ..LinkParams::default()
        },
        ChannelActors {
            alpha_e_sq: 0.5,
            eta_det_e: 1.0,
            ..ChannelActors::default()
        },
    )
}

/// Photon flux (1/s) of a monochromatic beam of `power_w` watts.
pub fn photon_rate(power_w: f64, wavelength_m: f64) -> f64 {
    const PLANCK: f64 = 6.626_070_15e-34;
    const LIGHT_SPEED: f64 = 299_792_458.0;
    power_w * wavelength_m / (PLANCK * LIGHT_SPEED)
}

/// Every analytic quantity of one operating point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateReport {
    pub r_alice: f64,
    pub r_eve: f64,
    pub c_comm: f64,
    pub snr_eve: f64,
    pub snr_alice_amplitude: f64,
    pub snr_alice_phase: f64,
}

pub fn report(p: &LinkParams, a: &ChannelActors) -> Result<RateReport> {
    Ok(RateReport {
        r_alice: alice_rate(p, a)?,
        r_eve: eve_rate(p, a)?,
        c_comm: c_comm(p, a)?,
        snr_eve: snr_eve(p, a)?,
        snr_alice_amplitude: snr_alice_amplitude(p, a)?,
        snr_alice_phase: snr_alice_phase(p, a)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn alice_link(dphi: f64) -> LinkParams {
        LinkParams {
            n_quantum: 1000.0,
            eta_det: 0.5,
            phi: dphi,
            ..LinkParams::default()
        }
    }

    fn calibration_point() -> (LinkParams, ChannelActors) {
        let p = LinkParams {
            n_quantum: 4000.0,
            t_meas: 0.05,
            ..LinkParams::default()
        };
        let a = ChannelActors {
            alpha_e_sq: 1.0,
            eta_det_e: 1.0,
            ..ChannelActors::default()
        };
        (p, a)
    }

    #[test]
    fn preset_communication_counts() {
        let (p, a) = desk_preset();
        assert!((c_comm(&p, &a).unwrap() - 200.0).abs() < 1e-9);
        assert!((security_threshold(&p, &a, ThresholdForm::Approximate).unwrap() - 100.0).abs() < 1e-12);
    }

    #[test]
    fn alice_rate_fringe_extremes() {
        let a = ChannelActors::default();
        assert_relative_eq!(alice_rate(&alice_link(0.0), &a).unwrap(), 2000.0);
        assert!(alice_rate(&alice_link(PI), &a).unwrap().abs() < 1e-9);
        let blocked = ChannelActors {
            alpha_sq: 1.0,
            alpha_e_sq: 0.3,
            ..a
        };
        for dphi in [0.0, 1.0, PI] {
            assert_relative_eq!(alice_rate(&alice_link(dphi), &blocked).unwrap(), 1000.0);
        }
    }

    #[test]
    fn alice_rate_rejects_bad_probability() {
        let a = ChannelActors {
            alpha_sq: 1.5,
            ..ChannelActors::default()
        };
        match alice_rate(&alice_link(0.0), &a) {
            Err(Error::Domain { field, .. }) => assert_eq!(field, "actors.alpha_sq"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn eve_rate_examples() {
        let p = LinkParams {
            n_quantum: 1000.0,
            ..LinkParams::default()
        };
        let mut a = ChannelActors {
            alpha_e_sq: 1.0,
            eta_det_e: 1.0,
            ..ChannelActors::default()
        };
        assert_relative_eq!(eve_rate(&p, &a).unwrap(), 1000.0);
        a.n_class = 5000.0;
        assert_relative_eq!(eve_rate(&p, &a).unwrap(), 6000.0);
        a.alpha_sq = 1.0;
        assert_relative_eq!(eve_rate(&p, &a).unwrap(), 5000.0);
    }

    #[test]
    fn eve_levels() {
        let (p, a) = calibration_point();
        let lv = eve_level_counts(&p, &a).unwrap();
        assert_relative_eq!(lv.c1, 200.0, max_relative = 1e-12);
        assert_eq!(lv.c0, 0.0);

        let p2 = LinkParams {
            n_quantum: 0.0,
            t_meas: 1.0,
            ..p
        };
        let a2 = ChannelActors { n_class: 100.0, ..a };
        let lv = eve_level_counts(&p2, &a2).unwrap();
        assert_eq!((lv.c1, lv.c0), (100.0, 100.0));

        let blind = ChannelActors { eta_det_e: 0.0, ..a2 };
        let lv = eve_level_counts(&p, &blind).unwrap();
        assert_eq!((lv.c1, lv.c0), (0.0, 0.0));
    }

    #[test]
    fn snr_eve_examples() {
        let (p, mut a) = calibration_point();
        assert_relative_eq!(snr_eve(&p, &a).unwrap(), 200f64.sqrt(), max_relative = 1e-12);
        a.n_class = 99.5 * p.n_quantum;
        assert_relative_eq!(snr_eve(&p, &a).unwrap(), 1.0, max_relative = 1e-12);
        a.alpha_e_sq = 0.0;
        assert_eq!(snr_eve(&p, &a).unwrap(), 0.0);

        let no_pairs = LinkParams { n_quantum: 0.0, ..p };
        assert!(matches!(snr_eve(&no_pairs, &a), Err(Error::Domain { .. })));
    }

    #[test]
    fn snr_alice_examples() {
        let p = LinkParams {
            n_quantum: 100.0,
            t_meas: 1.0,
            eta_det: 1.0,
            ..LinkParams::default()
        };
        let mut a = ChannelActors::default();
        assert_relative_eq!(snr_alice_amplitude(&p, &a).unwrap(), (200.0f64 / 3.0).sqrt());
        assert_relative_eq!(snr_alice_phase(&p, &a).unwrap(), 20.0);
        a.alpha_e_sq = 0.75;
        assert_relative_eq!(snr_alice_phase(&p, &a).unwrap(), 2.0 * 50f64.sqrt(), max_relative = 1e-12);
        a.alpha_e_sq = 1.0;
        assert_eq!(snr_alice_amplitude(&p, &a).unwrap(), 0.0);
        assert_eq!(snr_alice_phase(&p, &a).unwrap(), 0.0);
    }

    #[test]
    fn alice_amplitude_snr_flat_in_jamming() {
        let p = LinkParams {
            n_quantum: 4000.0,
            t_meas: 0.05,
            ..LinkParams::default()
        };
        let quiet = ChannelActors::default();
        let loud = ChannelActors {
            n_class: 1e7 * p.n_quantum,
            ..quiet
        };
        assert_eq!(
            snr_alice_amplitude(&p, &quiet).unwrap(),
            snr_alice_amplitude(&p, &loud).unwrap()
        );
    }

    #[test]
    fn thresholds() {
        let (p, a) = calibration_point();
        assert_eq!(security_threshold(&p, &a, ThresholdForm::Approximate).unwrap(), 100.0);
        assert_eq!(security_threshold(&p, &a, ThresholdForm::Exact).unwrap(), 99.5);
        let blind = ChannelActors { eta_det_e: 0.0, ..a };
        assert_eq!(security_threshold(&p, &blind, ThresholdForm::Approximate).unwrap(), 0.0);
        assert_eq!(security_threshold(&p, &blind, ThresholdForm::Exact).unwrap(), 0.0);
    }

    #[test]
    fn security_predicate() {
        let (p, mut a) = calibration_point();
        assert!(!is_secure(&p, &a).unwrap());
        a.n_class = 1e5 * p.n_quantum;
        assert!(is_secure(&p, &a).unwrap());
        a.n_class = 99.5 * p.n_quantum;
        assert!(is_secure(&p, &a).unwrap());
        a.n_class = 99.4 * p.n_quantum;
        assert!(!is_secure(&p, &a).unwrap());
    }

    #[test]
    fn dfg_operating_points() {
        let pump = 2e16;
        for (eta_e, expected) in [(1e-3, true), (1e-4, true), (1e-9, false)] {
            let p = LinkParams {
                n_quantum: 4600.0 / eta_e,
                ..LinkParams::default()
            };
            let a = ChannelActors {
                eta_det_e: eta_e,
                alpha_e_sq: 0.0,
                n_class: 4.6e8 / eta_e,
                ..ChannelActors::default()
            };
            let r = dfg_check(pump, &p, &a).unwrap();
            assert_eq!(r.negligible, expected, "eta_e = {eta_e}");
            assert_eq!(r.c_dfg_rate < r.c_quantum_rate, expected);
        }
        let p = LinkParams::default();
        let r = dfg_check(pump, &p, &ChannelActors::default()).unwrap();
        assert_eq!(r.c_dfg_rate, 0.0);
        assert!(r.negligible);
        assert!(dfg_check(0.0, &p, &ChannelActors::default()).is_err());
    }

    #[test]
    fn pump_photon_flux_matches_8mw_at_532nm() {
        let rate = photon_rate(8e-3, 532e-9);
        assert!((rate / 2e16 - 1.0).abs() < 0.1, "{rate}");
    }

    #[test]
    fn lossy_link() {
        let p = alice_link(0.0);
        let mut a = ChannelActors::default();
        assert_relative_eq!(lossy_alice_rate(&p, &a).unwrap(), 2000.0);
        a.eta_losses_sq = 1.0;
        for dphi in [0.0, 0.7, PI] {
            assert_relative_eq!(lossy_alice_rate(&alice_link(dphi), &a).unwrap(), 1000.0);
        }
        a.eta_losses_sq = 0.75;
        assert_relative_eq!(lossy_alice_rate(&p, &a).unwrap(), 1500.0, max_relative = 1e-12);
    }

    #[test]
    fn lossy_visibility_recovered_from_phase_sweep() {
        // fit R(dphi) = A + B cos(dphi) by least squares on a uniform sweep;
        // for a uniform grid over a full period the normal equations decouple
        let a = ChannelActors {
            eta_losses_sq: 0.75,
            ..ChannelActors::default()
        };
        let n = 64;
        let (mut mean, mut cos_proj) = (0.0, 0.0);
        for k in 0..n {
            let dphi = 2.0 * PI * k as f64 / n as f64;
            let r = lossy_alice_rate(&alice_link(dphi), &a).unwrap();
            mean += r / n as f64;
            cos_proj += 2.0 * r * dphi.cos() / n as f64;
        }
        assert_relative_eq!(cos_proj / mean, 0.5, max_relative = 1e-9);
    }
}
