//! Asymptotic decoy-state BB84 key rate with one weak decoy and an optional
//! vacuum decoy.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise::{DetectorSpec, NoiseBudget};
use crate::topology::{quantum_path_loss, Topology};

/// Error probability of a background click.
pub const BACKGROUND_ERROR: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecoyParams {
    pub mu: f64,
    pub nu: f64,
    pub vacuum: bool,
    /// Signal : decoy : vacuum preparation weights.
    pub state_ratio: [f64; 3],
    pub clock_hz: f64,
    /// Basis-sifting factor.
    pub sifting: f64,
    /// Error-correction inefficiency, ≥ 1.
    pub ec_efficiency: f64,
    /// Operational abort threshold on the signal QBER.
    pub qber_cap: f64,
    /// Hard feasibility bound on the signal QBER.
    pub qber_max: f64,
}

impl Default for DecoyParams {
    fn default() -> Self {
        DecoyParams {
            mu: 0.6,
            nu: 0.2,
            vacuum: true,
            state_ratio: [6.0, 1.0, 1.0],
            clock_hz: 625e6,
            sifting: 0.5,
            ec_efficiency: 1.16,
            qber_cap: 0.03,
            qber_max: 0.11,
        }
    }
}

impl DecoyParams {
    pub fn signal_fraction(&self) -> f64 {
        let [s, d, v] = self.state_ratio;
        let v = if self.vacuum { v } else { 0.0 };
        s / (s + d + v)
    }

    pub fn validate(&self) -> std::result::Result<(), Vec<String>> {
        let mut out = Vec::new();
        if !(self.nu > 0.0 && self.nu < self.mu) || !self.mu.is_finite() {
            out.push(format!("need 0 < nu < mu (got mu {}, nu {})", self.mu, self.nu));
        }
        let [s, d, v] = self.state_ratio;
        if !(s > 0.0 && d > 0.0) || !(v > 0.0 || (!self.vacuum && v >= 0.0)) {
            out.push(format!("state ratio weights must be positive (got {s}:{d}:{v})"));
        }
        if !(self.clock_hz > 0.0) || !self.clock_hz.is_finite() {
            out.push(format!("clock must be > 0 (got {})", self.clock_hz));
        }
        if !(self.sifting > 0.0 && self.sifting <= 1.0) {
            out.push(format!("sifting factor must be in (0, 1] (got {})", self.sifting));
        }
        if !(self.ec_efficiency >= 1.0) || !self.ec_efficiency.is_finite() {
            out.push(format!(
                "error-correction efficiency must be ≥ 1 (got {})",
                self.ec_efficiency
            ));
        }
        if !(self.qber_cap > 0.0 && self.qber_cap <= self.qber_max && self.qber_max < 0.5) {
            out.push(format!(
                "need 0 < qber_cap ≤ qber_max < 0.5 (got {}, {})",
                self.qber_cap, self.qber_max
            ));
        }
        if out.is_empty() {
            Ok(())
        } else {
            Err(out)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelModel {
    /// Probability that one photon sent by Alice clicks Bob's detector.
    pub eta: f64,
    /// Background click probability per gate.
    pub y0: f64,
    pub e_detector: f64,
    pub e0: f64,
}

impl ChannelModel {
    pub fn new(eta: f64, y0: f64, e_detector: f64) -> Self {
        ChannelModel {
            eta,
            y0,
            e_detector,
            e0: BACKGROUND_ERROR,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.eta) {
            return Err(Error::InvalidQuantity {
                what: "channel transmittance",
                value: self.eta,
            });
        }
        if !(0.0..1.0).contains(&self.y0) {
            return Err(Error::InvalidQuantity {
                what: "background yield",
                value: self.y0,
            });
        }
        if !(0.0..=0.5).contains(&self.e_detector) {
            return Err(Error::InvalidQuantity {
                what: "misalignment error",
                value: self.e_detector,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Infeasibility {
    QberAboveHardBound,
    QberAboveCap,
    NoDetections,
    DecoyBoundInvalid,
    NoPositiveKey,
}

impl Infeasibility {
    pub fn reason(self) -> &'static str {
        match self {
            Infeasibility::QberAboveHardBound => "QBER above hard bound",
            Infeasibility::QberAboveCap => "QBER above operating cap",
            Infeasibility::NoDetections => "no detections",
            Infeasibility::DecoyBoundInvalid => "decoy bounds inconsistent",
            Infeasibility::NoPositiveKey => "no positive key",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GainQber {
    pub gain: f64,
    /// `None` when nothing is ever detected.
    pub qber: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecoyBounds {
    pub y1_lower: f64,
    pub e1_upper: f64,
    pub q1: f64,
    pub feasible: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KeyRateResult {
    pub q_mu: f64,
    pub q_nu: f64,
    pub e_mu: f64,
    pub e_nu: f64,
    pub y1_lower: f64,
    pub e1_upper: f64,
    pub q1: f64,
    pub rate_per_pulse: f64,
    pub rate_bps: f64,
    pub feasible: bool,
    pub infeasibility: Option<Infeasibility>,
}

pub fn binary_entropy(x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::InvalidQuantity {
            what: "probability",
            value: x,
        });
    }
    if x == 0.0 || x == 1.0 {
        return Ok(0.0);
    }
    Ok(-x * x.log2() - (1.0 - x) * (1.0 - x).log2())
}

/// Gain `Q = y0 + 1 − e^(−ηm)` and QBER `E = (e0·y0 + e_d·(1 − e^(−ηm)))/Q`.
pub fn gain_and_qber(ch: &ChannelModel, m: f64) -> Result<GainQber> {
    if !(m >= 0.0) || !m.is_finite() {
        return Err(Error::InvalidQuantity {
            what: "mean photon number",
            value: m,
        });
    }
    ch.validate()?;
    let signal = -(-ch.eta * m).exp_m1();
    let gain = ch.y0 + signal;
    let qber = (gain > 0.0).then(|| (ch.e0 * ch.y0 + ch.e_detector * signal) / gain);
    Ok(GainQber { gain, qber })
}

/// Vacuum + weak decoy bounds on the single-photon yield and error rate.
///
/// Without the vacuum decoy, `y0` is ignored and replaced by its upper bound
/// `E_μ·Q_μ·e^μ/e0` in the yield bound and by zero in the error bound.
pub fn decoy_bounds(q_mu: f64, e_mu: f64, q_nu: f64, e_nu: f64, y0: f64, p: &DecoyParams) -> Result<DecoyBounds> {
    p.validate().map_err(|v| Error::InvalidParams(v.join("; ")))?;
    let (mu, nu) = (p.mu, p.nu);
    let (y0_for_yield, y0_for_error) = if p.vacuum {
        (y0, y0)
    } else {
        (e_mu * q_mu * mu.exp() / BACKGROUND_ERROR, 0.0)
    };

    let y1_lower = (mu / (mu * nu - nu * nu))
        * (q_nu * nu.exp()
            - q_mu * mu.exp() * (nu * nu) / (mu * mu)
            - ((mu * mu - nu * nu) / (mu * mu)) * y0_for_yield);
    let e1_upper = if y1_lower > 0.0 {
        (e_nu * q_nu * nu.exp() - BACKGROUND_ERROR * y0_for_error) / (y1_lower * nu)
    } else {
        f64::NAN
    };
    let feasible = y1_lower > 0.0 && (0.0..=0.5).contains(&e1_upper);
    Ok(DecoyBounds {
        y1_lower,
        e1_upper,
        q1: y1_lower * mu * (-mu).exp(),
        feasible,
    })
}

/// Asymptotic secret key rate (GLLP composition with decoy-state bounds).
pub fn secure_key_rate(ch: &ChannelModel, p: &DecoyParams) -> Result<KeyRateResult> {
    p.validate().map_err(|v| Error::InvalidParams(v.join("; ")))?;
    let sig = gain_and_qber(ch, p.mu)?;
    let dec = gain_and_qber(ch, p.nu)?;

    let mut out = KeyRateResult {
        q_mu: sig.gain,
        q_nu: dec.gain,
        e_mu: sig.qber.unwrap_or(f64::NAN),
        e_nu: dec.qber.unwrap_or(f64::NAN),
        y1_lower: 0.0,
        e1_upper: f64::NAN,
        q1: 0.0,
        rate_per_pulse: 0.0,
        rate_bps: 0.0,
        feasible: false,
        infeasibility: None,
    };
    let (Some(e_mu), Some(e_nu)) = (sig.qber, dec.qber) else {
        out.infeasibility = Some(Infeasibility::NoDetections);
        return Ok(out);
    };

    let bounds = decoy_bounds(sig.gain, e_mu, dec.gain, e_nu, ch.y0, p)?;
    out.y1_lower = bounds.y1_lower;
    out.e1_upper = bounds.e1_upper;
    out.q1 = bounds.q1;

    let verdict = if e_mu >= p.qber_max {
        Some(Infeasibility::QberAboveHardBound)
    } else if e_mu > p.qber_cap {
        Some(Infeasibility::QberAboveCap)
    } else if !bounds.feasible {
        Some(Infeasibility::DecoyBoundInvalid)
    } else {
        None
    };
    if verdict.is_some() {
        out.infeasibility = verdict;
        return Ok(out);
    }

    let per_pulse = p.sifting
        * (bounds.q1 * (1.0 - binary_entropy(bounds.e1_upper)?) - sig.gain * p.ec_efficiency * binary_entropy(e_mu)?);
    if !(per_pulse > 0.0) {
        out.infeasibility = Some(Infeasibility::NoPositiveKey);
        return Ok(out);
    }
    out.rate_per_pulse = per_pulse;
    out.rate_bps = per_pulse * p.clock_hz * p.signal_fraction();
    out.feasible = true;
    Ok(out)
}

/// Translate detector count rates into per-gate probabilities.
pub fn budget_to_channel(b: &NoiseBudget, t: &Topology, det: &DetectorSpec) -> Result<ChannelModel> {
    if b.clock_hz != det.clock_hz {
        return Err(Error::Configuration(format!(
            "noise budget clock {} Hz differs from detector clock {} Hz",
            b.clock_hz, det.clock_hz
        )));
    }
    let eta = quantum_path_loss(t).transmittance()? * det.efficiency;
    let y0 = b.total_noise().hz() / det.clock_hz;
    if !(y0 < 1.0) {
        return Err(Error::Saturation { y0 });
    }
    Ok(ChannelModel::new(eta, y0, det.misalignment_error))
}
