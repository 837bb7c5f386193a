//! Single-fiber QKD + GPON layouts and their path losses.
//!
//! Alice shares a site with the OLT, and Bob shares a site with one ONU. Fiber 1
//! runs from Alice to the split point and fiber 2 from the split point to Bob.
//! Classical light always crosses the power splitter. In the bypass layout the
//! quantum channel is dropped out by a filter pair ahead of the splitter and
//! re-inserted after it, so the quantum channel only pays that pair's insertion
//! loss.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantities::{DecibelLoss, Wavelength};

pub const DEFAULT_ATTENUATION_DB_PER_KM: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Architecture {
    /// Quantum channel passes through the splitter with the classical traffic.
    Through,
    /// Quantum channel bypasses the splitter.
    Bypass,
}

impl Architecture {
    pub fn as_str(self) -> &'static str {
        match self {
            Architecture::Through => "through",
            Architecture::Bypass => "bypass",
        }
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// OLT to ONU.
    Downstream,
    /// ONU to OLT.
    Upstream,
}

/// The four wavelengths carried on the shared fiber.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Channel {
    Upstream1310,
    Downstream1490,
    Quantum1550,
    Clock1570,
}

impl Channel {
    pub fn wavelength(self) -> Wavelength {
        match self {
            Channel::Upstream1310 => Wavelength::UPSTREAM_1310,
            Channel::Downstream1490 => Wavelength::DOWNSTREAM_1490,
            Channel::Quantum1550 => Wavelength::QUANTUM_1550,
            Channel::Clock1570 => Wavelength::CLOCK_1570,
        }
    }

    /// Exact match against the channel plan; anything else is `None`.
    pub fn from_wavelength(lambda: Wavelength) -> Option<Channel> {
        [
            Channel::Upstream1310,
            Channel::Downstream1490,
            Channel::Quantum1550,
            Channel::Clock1570,
        ]
        .into_iter()
        .find(|c| c.wavelength().nm() == lambda.nm())
    }

    pub fn is_classical(self) -> bool {
        matches!(self, Channel::Upstream1310 | Channel::Downstream1490)
    }
}

/// Fiber attenuation in dB/km at each channel wavelength.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttenuationProfile {
    pub ch1310: f64,
    pub ch1490: f64,
    pub ch1550: f64,
    pub ch1570: f64,
}

impl AttenuationProfile {
    pub fn flat(db_per_km: f64) -> Self {
        AttenuationProfile {
            ch1310: db_per_km,
            ch1490: db_per_km,
            ch1550: db_per_km,
            ch1570: db_per_km,
        }
    }

    pub fn db_per_km(&self, channel: Channel) -> f64 {
        match channel {
            Channel::Upstream1310 => self.ch1310,
            Channel::Downstream1490 => self.ch1490,
            Channel::Quantum1550 => self.ch1550,
            Channel::Clock1570 => self.ch1570,
        }
    }

    fn entries(&self) -> [(&'static str, f64); 4] {
        [
            ("ch1310", self.ch1310),
            ("ch1490", self.ch1490),
            ("ch1550", self.ch1550),
            ("ch1570", self.ch1570),
        ]
    }
}

impl Default for AttenuationProfile {
    fn default() -> Self {
        AttenuationProfile::flat(DEFAULT_ATTENUATION_DB_PER_KM)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiberSpan {
    pub length_km: f64,
    pub attenuation_db_per_km: AttenuationProfile,
}

impl FiberSpan {
    pub fn new(length_km: f64) -> Self {
        FiberSpan {
            length_km,
            attenuation_db_per_km: AttenuationProfile::default(),
        }
    }

    pub fn with_attenuation(length_km: f64, attenuation_db_per_km: AttenuationProfile) -> Self {
        FiberSpan {
            length_km,
            attenuation_db_per_km,
        }
    }

    pub fn loss(&self, channel: Channel) -> DecibelLoss {
        DecibelLoss(self.length_km * self.attenuation_db_per_km.db_per_km(channel))
    }

    /// Power attenuation coefficient in 1/km (natural log), `dB/km · ln10/10`.
    pub fn alpha_per_km(&self, channel: Channel) -> f64 {
        self.attenuation_db_per_km.db_per_km(channel) * std::f64::consts::LN_10 / 10.0
    }

    /// Cut the span at `at_km` from its start.
    pub fn split_at(&self, at_km: f64) -> (FiberSpan, FiberSpan) {
        let head = FiberSpan::with_attenuation(at_km, self.attenuation_db_per_km);
        let tail = FiberSpan::with_attenuation(self.length_km - at_km, self.attenuation_db_per_km);
        (head, tail)
    }

    fn check(&self, field: &str, out: &mut Vec<Violation>) {
        if !(self.length_km >= 0.0) || !self.length_km.is_finite() {
            out.push(Violation::new(
                format!("{field}.length_km"),
                "length ≥ 0",
                self.length_km,
            ));
        }
        for (ch, a) in self.attenuation_db_per_km.entries() {
            if !(a > 0.0) || !a.is_finite() {
                out.push(Violation::new(
                    format!("{field}.attenuation_db_per_km.{ch}"),
                    "attenuation > 0",
                    a,
                ));
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitterSpec {
    pub ratio: u32,
    pub excess_loss_db: f64,
}

impl SplitterSpec {
    pub fn ideal(ratio: u32) -> Self {
        SplitterSpec {
            ratio,
            excess_loss_db: 0.0,
        }
    }
}

/// `10·log10(N)` plus excess loss.
pub fn splitter_loss(s: &SplitterSpec) -> Result<DecibelLoss> {
    if s.ratio < 1 {
        return Err(Error::InvalidTopology(vec![Violation::new(
            "splitter.ratio".into(),
            "ratio ≥ 1",
            s.ratio as f64,
        )]));
    }
    Ok(DecibelLoss(10.0 * (s.ratio as f64).log10() + s.excess_loss_db))
}

/// One filter (FWDM or CWDM) in the multiplexing chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WdmElement {
    pub name: String,
    pub insertion_loss_db: f64,
    pub isolation_db: f64,
}

impl WdmElement {
    pub fn chain_insertion_loss(elements: &[WdmElement]) -> DecibelLoss {
        elements.iter().map(|e| DecibelLoss(e.insertion_loss_db)).sum()
    }
}

/// One failed check from [`validate`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub field: String,
    pub rule: &'static str,
    pub value: f64,
}

impl Violation {
    pub fn new(field: String, rule: &'static str, value: f64) -> Self {
        Violation { field, rule, value }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {} (got {})", self.field, self.rule, self.value)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Topology {
    pub architecture: Architecture,
    /// Alice/OLT to the split point.
    pub fiber1: FiberSpan,
    /// Split point to Bob/ONU.
    pub fiber2: FiberSpan,
    pub splitter: SplitterSpec,
    /// Aggregate WDM insertion on the quantum path, split evenly between Alice and Bob.
    pub wdm_total_quantum: DecibelLoss,
    /// Aggregate WDM insertion on the classical path.
    pub wdm_total_classical: DecibelLoss,
    /// The filter pair at the split point; only used by [`Architecture::Bypass`].
    pub bypass_wdm_extra: DecibelLoss,
    /// Access drop to another subscriber behind the splitter. Classical only.
    pub user_drop: Option<FiberSpan>,
}

impl Topology {
    /// The reference layout: ideal splitter, 1 dB quantum WDM aggregate, 1 dB
    /// bypass filter pair, 0.25 dB/km fiber.
    pub fn new(architecture: Architecture, fiber1_km: f64, fiber2_km: f64, ratio: u32) -> Self {
        Topology {
            architecture,
            fiber1: FiberSpan::new(fiber1_km),
            fiber2: FiberSpan::new(fiber2_km),
            splitter: SplitterSpec::ideal(ratio),
            wdm_total_quantum: DecibelLoss(1.0),
            wdm_total_classical: DecibelLoss(1.0),
            bypass_wdm_extra: DecibelLoss(1.0),
            user_drop: None,
        }
    }

    pub fn with_architecture(&self, architecture: Architecture) -> Self {
        Topology {
            architecture,
            ..self.clone()
        }
    }

    /// Validate and return self, or every violation found.
    pub fn validated(self) -> Result<Self> {
        validate(&self).map_err(Error::InvalidTopology)?;
        Ok(self)
    }

    /// Quantum-channel loss at the split point: the splitter, or the bypass filters.
    pub fn split_point_quantum_loss(&self) -> DecibelLoss {
        match self.architecture {
            Architecture::Through => self.splitter_total(),
            Architecture::Bypass => self.bypass_wdm_extra,
        }
    }

    /// Bob's half of the quantum WDM aggregate.
    pub fn receiver_wdm_loss(&self) -> DecibelLoss {
        DecibelLoss(self.wdm_total_quantum.db() / 2.0)
    }

    fn splitter_total(&self) -> DecibelLoss {
        DecibelLoss(10.0 * (self.splitter.ratio.max(1) as f64).log10() + self.splitter.excess_loss_db)
    }

    /// Loss seen by classical light crossing the split point, in any architecture.
    pub fn classical_split_loss(&self) -> DecibelLoss {
        self.splitter_total()
    }
}

/// Alice to Bob at 1550 nm.
pub fn quantum_path_loss(t: &Topology) -> DecibelLoss {
    let q = Channel::Quantum1550;
    t.fiber1.loss(q) + t.split_point_quantum_loss() + t.fiber2.loss(q) + t.wdm_total_quantum
}

/// OLT to Bob's ONU (or back). Identical for both architectures.
pub fn classical_path_loss(t: &Topology, lambda: Wavelength, direction: Direction) -> Result<DecibelLoss> {
    let channel = classical_channel(lambda)?;
    // passive and reciprocal: both directions see the same elements
    let _ = direction;
    Ok(t.fiber1.loss(channel) + t.classical_split_loss() + t.fiber2.loss(channel) + t.wdm_total_classical)
}

/// OLT to the subscriber on the access drop, when one is configured.
pub fn user_drop_path_loss(t: &Topology, lambda: Wavelength) -> Result<Option<DecibelLoss>> {
    let channel = classical_channel(lambda)?;
    Ok(t.user_drop
        .as_ref()
        .map(|drop| t.fiber1.loss(channel) + t.classical_split_loss() + drop.loss(channel) + t.wdm_total_classical))
}

fn classical_channel(lambda: Wavelength) -> Result<Channel> {
    match Channel::from_wavelength(lambda) {
        Some(c) if c.is_classical() => Ok(c),
        _ => Err(Error::WrongChannel(lambda.nm())),
    }
}

/// Check every topology invariant and report all violations.
pub fn validate(t: &Topology) -> std::result::Result<(), Vec<Violation>> {
    let mut out = Vec::new();
    t.fiber1.check("fiber1", &mut out);
    t.fiber2.check("fiber2", &mut out);
    if let Some(drop) = &t.user_drop {
        drop.check("user_drop", &mut out);
    }
    if t.splitter.ratio < 1 {
        out.push(Violation::new(
            "splitter.ratio".into(),
            "ratio ≥ 1",
            t.splitter.ratio as f64,
        ));
    }
    let non_negative = [
        ("splitter.excess_loss_db", t.splitter.excess_loss_db),
        ("wdm_total_quantum", t.wdm_total_quantum.db()),
        ("wdm_total_classical", t.wdm_total_classical.db()),
        ("bypass_wdm_extra", t.bypass_wdm_extra.db()),
    ];
    for (field, v) in non_negative {
        if !(v >= 0.0) || !v.is_finite() {
            out.push(Violation::new(field.into(), "loss ≥ 0", v));
        }
    }
    if out.is_empty() {
        Ok(())
    } else {
        Err(out)
    }
}
