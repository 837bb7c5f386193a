//! Spontaneous Raman noise from the GPON wavelengths landing in the 1550 nm
//! quantum channel, expressed as detector counts at Bob.
//!
//! The four noise terms follow the pump that creates them:
//!
//! | term | pump                    | span    | direction vs pump | extra path to Bob          |
//! |------|-------------------------|---------|-------------------|----------------------------|
//! | d1   | 1490 nm downstream      | fiber 1 | co-propagating    | split point, fiber 2       |
//! | d2   | 1490 nm after splitter  | fiber 2 | co-propagating    | none                       |
//! | d3   | 1310 nm upstream        | fiber 2 | counter           | none                       |
//! | d4   | 1310 nm after splitter  | fiber 1 | counter           | split point, fiber 2       |
//!
//! Every term also crosses Bob's half of the quantum WDM aggregate. Classical
//! pumps always cross the power splitter, so only d1 and d4 see a different
//! split-point loss between the two layouts.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantities::{photon_rate, CountRate, DecibelLoss, OpticalPower, Wavelength};
use crate::topology::{quantum_path_loss, Architecture, Channel, Direction, Topology};

/// Raman coefficient default, W per km per GHz of detection bandwidth per W of pump.
pub const DEFAULT_RAMAN_PER_KM_GHZ: f64 = 5e-12;
pub const DEFAULT_DOWNSTREAM_DBM: f64 = 3.0;
pub const DEFAULT_UPSTREAM_DBM: f64 = 0.5;

/// A GPON transmitter acting as a Raman pump.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassicalSource {
    /// Downstream is the 1490 nm OLT at Alice; upstream is the 1310 nm ONU at Bob.
    pub direction: Direction,
    /// Power launched into the feeder fiber at the transmitter's end.
    pub launch_power: OpticalPower,
    /// Scattered power into the 1550 nm band, per W of pump, per km, per GHz.
    pub raman_per_km_ghz: f64,
    /// Fraction of time the transmitter is on (upstream is bursty in a real PON).
    pub duty_factor: f64,
}

impl ClassicalSource {
    pub fn downstream(launch_power: OpticalPower) -> Self {
        ClassicalSource {
            direction: Direction::Downstream,
            launch_power,
            raman_per_km_ghz: DEFAULT_RAMAN_PER_KM_GHZ,
            duty_factor: 1.0,
        }
    }

    pub fn upstream(launch_power: OpticalPower) -> Self {
        ClassicalSource {
            direction: Direction::Upstream,
            ..ClassicalSource::downstream(launch_power)
        }
    }

    /// The default OLT and ONU pair.
    pub fn default_pair() -> [ClassicalSource; 2] {
        [
            ClassicalSource::downstream(OpticalPower::from_dbm(DEFAULT_DOWNSTREAM_DBM).expect("finite")),
            ClassicalSource::upstream(OpticalPower::from_dbm(DEFAULT_UPSTREAM_DBM).expect("finite")),
        ]
    }

    pub fn wavelength(&self) -> Wavelength {
        self.channel().wavelength()
    }

    fn channel(&self) -> Channel {
        match self.direction {
            Direction::Downstream => Channel::Downstream1490,
            Direction::Upstream => Channel::Upstream1310,
        }
    }

    pub fn validate(&self) -> std::result::Result<(), Vec<String>> {
        let mut out = Vec::new();
        if !(self.raman_per_km_ghz >= 0.0) || !self.raman_per_km_ghz.is_finite() {
            out.push(format!("raman coefficient must be ≥ 0 (got {})", self.raman_per_km_ghz));
        }
        if !(0.0..=1.0).contains(&self.duty_factor) {
            out.push(format!("duty factor must be in [0, 1] (got {})", self.duty_factor));
        }
        if out.is_empty() {
            Ok(())
        } else {
            Err(out)
        }
    }
}

/// Gated single-photon detector at Bob.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorSpec {
    pub efficiency: f64,
    /// Dark count rate with the gate permanently open.
    pub dark_rate_hz: f64,
    pub gate_width_s: f64,
    pub clock_hz: f64,
    /// Receiver noise filter bandwidth.
    pub filter_bandwidth_ghz: f64,
    /// Share of unpolarized Raman light passed by the polarization analyzer.
    pub noise_acceptance: f64,
    /// Intrinsic optical misalignment error probability.
    pub misalignment_error: f64,
}

impl Default for DetectorSpec {
    fn default() -> Self {
        DetectorSpec {
            efficiency: 0.10,
            dark_rate_hz: 1000.0,
            gate_width_s: 180e-12,
            clock_hz: 625e6,
            filter_bandwidth_ghz: 100.0,
            noise_acceptance: 0.5,
            misalignment_error: 0.01,
        }
    }
}

impl DetectorSpec {
    /// Fraction of time the gate is open: gate width × clock.
    pub fn duty_cycle(&self) -> f64 {
        self.gate_width_s * self.clock_hz
    }

    pub fn validate(&self) -> std::result::Result<(), Vec<String>> {
        let mut out = Vec::new();
        if !(self.efficiency > 0.0 && self.efficiency <= 1.0) {
            out.push(format!("efficiency must be in (0, 1] (got {})", self.efficiency));
        }
        if !(self.dark_rate_hz >= 0.0) || !self.dark_rate_hz.is_finite() {
            out.push(format!("dark rate must be ≥ 0 (got {})", self.dark_rate_hz));
        }
        if !(self.clock_hz > 0.0) || !self.clock_hz.is_finite() {
            out.push(format!("clock must be > 0 (got {})", self.clock_hz));
        }
        if !(self.gate_width_s > 0.0) {
            out.push(format!("gate width must be > 0 (got {})", self.gate_width_s));
        }
        let duty = self.duty_cycle();
        if !(duty > 0.0 && duty <= 1.0) {
            out.push(format!("gate duty cycle must be in (0, 1] (got {duty})"));
        }
        if !(self.filter_bandwidth_ghz > 0.0) || !self.filter_bandwidth_ghz.is_finite() {
            out.push(format!(
                "filter bandwidth must be > 0 (got {})",
                self.filter_bandwidth_ghz
            ));
        }
        if !(0.0..=1.0).contains(&self.noise_acceptance) {
            out.push(format!(
                "noise acceptance must be in [0, 1] (got {})",
                self.noise_acceptance
            ));
        }
        if !(0.0..0.5).contains(&self.misalignment_error) {
            out.push(format!(
                "misalignment error must be in [0, 0.5) (got {})",
                self.misalignment_error
            ));
        }
        if out.is_empty() {
            Ok(())
        } else {
            Err(out)
        }
    }
}

/// Detector-referenced counts per second at Bob.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseBudget {
    pub architecture: Architecture,
    pub ratio: u32,
    pub clock_hz: f64,
    pub d0: CountRate,
    pub d1: CountRate,
    pub d2: CountRate,
    pub d3: CountRate,
    pub d4: CountRate,
    /// Detected signal-state pulses per second.
    pub q_signal: CountRate,
}

impl NoiseBudget {
    pub fn terms(&self) -> [f64; 5] {
        [self.d0.hz(), self.d1.hz(), self.d2.hz(), self.d3.hz(), self.d4.hz()]
    }

    pub fn total_noise(&self) -> CountRate {
        self.d0 + self.d1 + self.d2 + self.d3 + self.d4
    }
}

fn check_alpha(alpha_per_km: f64) -> Result<()> {
    if !(alpha_per_km > 0.0) || !alpha_per_km.is_finite() {
        return Err(Error::InvalidQuantity {
            what: "attenuation coefficient (1/km)",
            value: alpha_per_km,
        });
    }
    Ok(())
}

fn check_non_negative(what: &'static str, v: f64) -> Result<()> {
    if !(v >= 0.0) || !v.is_finite() {
        return Err(Error::InvalidQuantity { what, value: v });
    }
    Ok(())
}

/// Co-propagating scattered power leaving the far end of a span:
/// `P·ρ·B·L·e^(−αL)`.
pub fn forward_raman_power(
    pump: OpticalPower,
    raman_per_km_ghz: f64,
    bandwidth_ghz: f64,
    length_km: f64,
    alpha_per_km: f64,
) -> Result<OpticalPower> {
    check_alpha(alpha_per_km)?;
    check_non_negative("raman coefficient", raman_per_km_ghz)?;
    check_non_negative("bandwidth (GHz)", bandwidth_ghz)?;
    check_non_negative("span length (km)", length_km)?;
    let w = pump.watts() * raman_per_km_ghz * bandwidth_ghz * length_km * (-alpha_per_km * length_km).exp();
    OpticalPower::from_watts(w)
}

/// Counter-propagating scattered power leaving the pump-input end of a span:
/// `P·ρ·B·(1 − e^(−2αL))/(2α)`.
pub fn backward_raman_power(
    pump: OpticalPower,
    raman_per_km_ghz: f64,
    bandwidth_ghz: f64,
    length_km: f64,
    alpha_per_km: f64,
) -> Result<OpticalPower> {
    check_alpha(alpha_per_km)?;
    check_non_negative("raman coefficient", raman_per_km_ghz)?;
    check_non_negative("bandwidth (GHz)", bandwidth_ghz)?;
    check_non_negative("span length (km)", length_km)?;
    // exp_m1 keeps precision for short spans
    let effective_km = -(-2.0 * alpha_per_km * length_km).exp_m1() / (2.0 * alpha_per_km);
    OpticalPower::from_watts(pump.watts() * raman_per_km_ghz * bandwidth_ghz * effective_km)
}

/// Noise terms and signal count for one topology.
///
/// `sources` must hold exactly one downstream and one upstream transmitter.
/// `signal_fraction` is the share of pulses prepared in the signal state.
pub fn noise_budget(
    t: &Topology,
    sources: &[ClassicalSource],
    det: &DetectorSpec,
    mu: f64,
    signal_fraction: f64,
) -> Result<NoiseBudget> {
    crate::topology::validate(t).map_err(Error::InvalidTopology)?;
    let down = single_source(sources, Direction::Downstream)?;
    let up = single_source(sources, Direction::Upstream)?;
    check_non_negative("mean photon number", mu)?;

    let q = Channel::Quantum1550;
    let bandwidth = det.filter_bandwidth_ghz;
    let duty = det.duty_cycle();
    let to_counts = |scattered: OpticalPower, src: &ClassicalSource, to_bob: DecibelLoss| -> Result<CountRate> {
        let at_bob = scattered.attenuate(to_bob)?;
        Ok(photon_rate(at_bob, Wavelength::QUANTUM_1550)?
            .scale(det.efficiency * duty * det.noise_acceptance * src.duty_factor))
    };

    let bob_wdm = t.receiver_wdm_loss();
    let from_split_point = t.split_point_quantum_loss() + t.fiber2.loss(q) + bob_wdm;

    let d1 = {
        let s = forward_raman_power(
            down.launch_power,
            down.raman_per_km_ghz,
            bandwidth,
            t.fiber1.length_km,
            t.fiber1.alpha_per_km(q),
        )?;
        to_counts(s, down, from_split_point)?
    };
    let d2 = {
        let pump = down
            .launch_power
            .attenuate(t.fiber1.loss(down.channel()) + t.classical_split_loss())?;
        let s = forward_raman_power(
            pump,
            down.raman_per_km_ghz,
            bandwidth,
            t.fiber2.length_km,
            t.fiber2.alpha_per_km(q),
        )?;
        to_counts(s, down, bob_wdm)?
    };
    let d3 = {
        let s = backward_raman_power(
            up.launch_power,
            up.raman_per_km_ghz,
            bandwidth,
            t.fiber2.length_km,
            t.fiber2.alpha_per_km(q),
        )?;
        to_counts(s, up, bob_wdm)?
    };
    let d4 = {
        let pump = up
            .launch_power
            .attenuate(t.fiber2.loss(up.channel()) + t.classical_split_loss())?;
        let s = backward_raman_power(
            pump,
            up.raman_per_km_ghz,
            bandwidth,
            t.fiber1.length_km,
            t.fiber1.alpha_per_km(q),
        )?;
        to_counts(s, up, from_split_point)?
    };
    let d0 = CountRate::from_hz(det.dark_rate_hz * duty)?;

    let transmittance = quantum_path_loss(t).transmittance()?;
    let q_signal = CountRate::from_hz(mu * transmittance * det.efficiency * det.clock_hz * signal_fraction)?;

    Ok(NoiseBudget {
        architecture: t.architecture,
        ratio: t.splitter.ratio,
        clock_hz: det.clock_hz,
        d0,
        d1,
        d2,
        d3,
        d4,
        q_signal,
    })
}

fn single_source(sources: &[ClassicalSource], direction: Direction) -> Result<&ClassicalSource> {
    let mut it = sources.iter().filter(|s| s.direction == direction);
    match (it.next(), it.next()) {
        (Some(s), None) => Ok(s),
        (None, _) => Err(Error::Configuration(format!("missing {direction:?} classical source"))),
        (Some(_), Some(_)) => Err(Error::Configuration(format!(
            "more than one {direction:?} classical source"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const ALPHA_025: f64 = 0.0576;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    fn mw(x: f64) -> OpticalPower {
        OpticalPower::from_watts(x * 1e-3).unwrap()
    }

    #[test]
    fn forward_examples() {
        assert_eq!(
            forward_raman_power(mw(1.0), 2e-9, 100.0, 0.0, ALPHA_025)
                .unwrap()
                .watts(),
            0.0
        );
        let p = forward_raman_power(mw(1.0), 2e-9, 100.0, 10.0, ALPHA_025).unwrap();
        assert!(rel(p.watts(), 1.12428e-9) < 1e-5, "{}", p.watts());
        let p2 = forward_raman_power(mw(2.0), 2e-9, 100.0, 10.0, ALPHA_025).unwrap();
        assert!(rel(p2.watts(), 2.0 * p.watts()) < 1e-15);
    }

    #[test]
    fn backward_examples() {
        assert_eq!(
            backward_raman_power(mw(1.0), 2e-9, 100.0, 0.0, ALPHA_025)
                .unwrap()
                .watts(),
            0.0
        );
        let p = backward_raman_power(mw(1.0), 2e-9, 100.0, 10.0, ALPHA_025).unwrap();
        assert!(rel(p.watts(), 1.18749e-9) < 1e-5, "{}", p.watts());
        let sat = 1e-3 * 2e-9 * 100.0 / (2.0 * ALPHA_025);
        let far = backward_raman_power(mw(1.0), 2e-9, 100.0, 1e4, ALPHA_025).unwrap();
        assert!(rel(far.watts(), sat) < 1e-12);
    }

    #[test]
    fn non_positive_alpha_is_rejected() {
        assert!(forward_raman_power(mw(1.0), 2e-9, 100.0, 1.0, 0.0).is_err());
        assert!(backward_raman_power(mw(1.0), 2e-9, 100.0, 1.0, -0.1).is_err());
    }

    #[test]
    fn forward_peaks_at_inverse_alpha() {
        let at = |l: f64| forward_raman_power(mw(1.0), 1e-9, 100.0, l, ALPHA_025).unwrap().watts();
        let peak = 1.0 / ALPHA_025;
        assert!(at(peak) > at(peak * 0.99));
        assert!(at(peak) > at(peak * 1.01));
        assert!(at(3.0 * peak) < at(2.0 * peak));
    }

    #[test]
    fn backward_is_monotone() {
        let mut last = 0.0;
        for i in 0..200 {
            let p = backward_raman_power(mw(1.0), 1e-9, 100.0, i as f64 * 0.5, ALPHA_025)
                .unwrap()
                .watts();
            assert!(p >= last);
            last = p;
        }
    }

    #[test]
    fn dark_only_budget() {
        let t = Topology::new(Architecture::Through, 12.0, 2.0, 32);
        let sources = [
            ClassicalSource::downstream(OpticalPower::ZERO),
            ClassicalSource::upstream(OpticalPower::ZERO),
        ];
        let det = DetectorSpec::default();
        let b = noise_budget(&t, &sources, &det, 0.6, 0.75).unwrap();
        assert_eq!([b.d1.hz(), b.d2.hz(), b.d3.hz(), b.d4.hz()], [0.0; 4]);
        assert!(rel(b.d0.hz(), 1000.0 * 0.1125) < 1e-12);
    }

    #[test]
    fn missing_or_duplicate_sources() {
        let t = Topology::new(Architecture::Through, 12.0, 2.0, 32);
        let det = DetectorSpec::default();
        let [down, up] = ClassicalSource::default_pair();
        assert!(matches!(
            noise_budget(&t, &[down], &det, 0.6, 0.75),
            Err(Error::Configuration(_))
        ));
        assert!(matches!(
            noise_budget(&t, &[down, up, up], &det, 0.6, 0.75),
            Err(Error::Configuration(_))
        ));
    }

    #[test]
    fn ratio_scaling_between_layouts() {
        let det = DetectorSpec::default();
        let sources = ClassicalSource::default_pair();
        for n in [2u32, 4, 32, 128] {
            let mut t = Topology::new(Architecture::Through, 12.0, 2.0, n);
            t.bypass_wdm_extra = DecibelLoss::ZERO;
            let th = noise_budget(&t, &sources, &det, 0.6, 0.75).unwrap();
            let by = noise_budget(&t.with_architecture(Architecture::Bypass), &sources, &det, 0.6, 0.75).unwrap();
            let nf = n as f64;
            assert!(rel(by.d1.hz() / th.d1.hz(), nf) < 1e-12);
            assert!(rel(by.d4.hz() / th.d4.hz(), nf) < 1e-12);
            assert!(rel(by.q_signal.hz() / th.q_signal.hz(), nf) < 1e-12);
            assert_eq!(by.d0, th.d0);
            assert_eq!(by.d2, th.d2);
            assert_eq!(by.d3, th.d3);
        }
    }

    #[test]
    fn detector_validation_lists_everything() {
        let det = DetectorSpec {
            efficiency: 0.0,
            clock_hz: -1.0,
            noise_acceptance: 2.0,
            ..DetectorSpec::default()
        };
        let v = det.validate().unwrap_err();
        assert!(v.len() >= 3, "{v:?}");
        assert!((DetectorSpec::default().duty_cycle() - 0.1125).abs() < 1e-15);
    }
}
