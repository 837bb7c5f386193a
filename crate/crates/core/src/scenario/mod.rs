//! Sweeps over fiber lengths, splitting ratios and layouts.

mod emit;
mod reference;

pub use emit::{
    emit, emit_plot_data, format_sig9, plot_data_csv, to_csv, to_json, write_atomic, OutputFormat, CSV_COLUMNS,
};
pub use reference::{
    calibration_csv, calibration_report, compare_with_reference, CalibrationCell, DeviationCell, DeviationReport,
    ReferenceCell, ReferenceTable, TableId, REFERENCE_FIBERS, REFERENCE_RATIOS,
};

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::{snr_report, snr_through, SnrReport};
use crate::error::{Error, Result};
use crate::keyrate::{budget_to_channel, secure_key_rate, DecoyParams, KeyRateResult};
use crate::noise::{noise_budget, ClassicalSource, DetectorSpec, NoiseBudget, DEFAULT_RAMAN_PER_KM_GHZ};
use crate::quantities::{DecibelLoss, OpticalPower};
use crate::topology::{
    quantum_path_loss, Architecture, AttenuationProfile, Direction, FiberSpan, SplitterSpec, Topology,
};

/// Annotation for cells whose through-splitter loss alone exceeds the loss budget.
pub const LOSS_INFEASIBLE: &str = "loss-infeasible";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiberConfig {
    pub fiber1_km: f64,
    pub fiber2_km: f64,
}

impl FiberConfig {
    pub fn new(fiber1_km: f64, fiber2_km: f64) -> Self {
        FiberConfig { fiber1_km, fiber2_km }
    }

    pub fn label(&self) -> String {
        format!("{}km+{}km", self.fiber1_km, self.fiber2_km)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArchitectureSet {
    Through,
    Bypass,
    Both,
}

impl ArchitectureSet {
    pub fn members(self) -> &'static [Architecture] {
        match self {
            ArchitectureSet::Through => &[Architecture::Through],
            ArchitectureSet::Bypass => &[Architecture::Bypass],
            ArchitectureSet::Both => &[Architecture::Through, Architecture::Bypass],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TopologyConfig {
    pub attenuation_db_per_km: AttenuationProfile,
    pub splitter_excess_loss_db: f64,
    pub wdm_quantum_total_db: f64,
    pub wdm_classical_total_db: f64,
    pub bypass_wdm_extra_db: f64,
    pub user_drop_km: Option<f64>,
}

impl Default for TopologyConfig {
    fn default() -> Self {
        TopologyConfig {
            attenuation_db_per_km: AttenuationProfile::default(),
            splitter_excess_loss_db: 0.0,
            wdm_quantum_total_db: 1.0,
            wdm_classical_total_db: 1.0,
            bypass_wdm_extra_db: 1.0,
            user_drop_km: None,
        }
    }
}

fn default_raman() -> f64 {
    DEFAULT_RAMAN_PER_KM_GHZ
}

fn default_duty() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceConfig {
    pub power_dbm: f64,
    #[serde(default = "default_raman")]
    pub raman_per_km_ghz: f64,
    #[serde(default = "default_duty")]
    pub duty_factor: f64,
}

impl SourceConfig {
    fn with_power(power_dbm: f64) -> Self {
        SourceConfig {
            power_dbm,
            raman_per_km_ghz: DEFAULT_RAMAN_PER_KM_GHZ,
            duty_factor: 1.0,
        }
    }

    fn source(&self, direction: Direction) -> Result<ClassicalSource> {
        Ok(ClassicalSource {
            direction,
            launch_power: OpticalPower::from_dbm(self.power_dbm)?,
            raman_per_km_ghz: self.raman_per_km_ghz,
            duty_factor: self.duty_factor,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DetectorConfig {
    pub efficiency: f64,
    pub dark_rate_hz: f64,
    pub gate_width_ps: f64,
    pub clock_hz: f64,
    pub filter_bandwidth_ghz: f64,
    pub noise_acceptance: f64,
    pub misalignment_error: f64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        let d = DetectorSpec::default();
        DetectorConfig {
            efficiency: d.efficiency,
            dark_rate_hz: d.dark_rate_hz,
            gate_width_ps: d.gate_width_s * 1e12,
            clock_hz: d.clock_hz,
            filter_bandwidth_ghz: d.filter_bandwidth_ghz,
            noise_acceptance: d.noise_acceptance,
            misalignment_error: d.misalignment_error,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DecoyConfig {
    pub mu: f64,
    pub nu: f64,
    pub vacuum: bool,
    pub state_ratio: [f64; 3],
    pub sifting: f64,
    pub ec_efficiency: f64,
    pub qber_cap: f64,
    pub qber_max: f64,
}

impl Default for DecoyConfig {
    fn default() -> Self {
        let p = DecoyParams::default();
        DecoyConfig {
            mu: p.mu,
            nu: p.nu,
            vacuum: p.vacuum,
            state_ratio: p.state_ratio,
            sifting: p.sifting,
            ec_efficiency: p.ec_efficiency,
            qber_cap: p.qber_cap,
            qber_max: p.qber_max,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub csv: Option<PathBuf>,
    pub json: Option<PathBuf>,
    pub plot: Option<PathBuf>,
}

/// Everything a sweep needs. Loaded from JSON; every field has a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub fiber_configs: Vec<FiberConfig>,
    pub ratios: Vec<u32>,
    pub architectures: ArchitectureSet,
    pub topology: TopologyConfig,
    pub downstream: SourceConfig,
    pub upstream: SourceConfig,
    pub detector: DetectorConfig,
    pub decoy: DecoyConfig,
    /// Through-splitter loss above which a cell is annotated loss-infeasible.
    pub loss_budget_db: f64,
    pub output: OutputConfig,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            fiber_configs: REFERENCE_FIBERS.iter().map(|&(a, b)| FiberConfig::new(a, b)).collect(),
            ratios: REFERENCE_RATIOS.to_vec(),
            architectures: ArchitectureSet::Both,
            topology: TopologyConfig::default(),
            downstream: SourceConfig::with_power(crate::noise::DEFAULT_DOWNSTREAM_DBM),
            upstream: SourceConfig::with_power(crate::noise::DEFAULT_UPSTREAM_DBM),
            detector: DetectorConfig::default(),
            decoy: DecoyConfig::default(),
            loss_budget_db: 20.0,
            output: OutputConfig::default(),
        }
    }
}

impl ScenarioConfig {
    pub fn from_json_str(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Configuration(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json_str(&text).map_err(|e| Error::Configuration(format!("{}: {e}", path.display())))
    }

    pub fn topology(&self, fiber: FiberConfig, ratio: u32, architecture: Architecture) -> Topology {
        let tc = &self.topology;
        Topology {
            architecture,
            fiber1: FiberSpan::with_attenuation(fiber.fiber1_km, tc.attenuation_db_per_km),
            fiber2: FiberSpan::with_attenuation(fiber.fiber2_km, tc.attenuation_db_per_km),
            splitter: SplitterSpec {
                ratio,
                excess_loss_db: tc.splitter_excess_loss_db,
            },
            wdm_total_quantum: DecibelLoss(tc.wdm_quantum_total_db),
            wdm_total_classical: DecibelLoss(tc.wdm_classical_total_db),
            bypass_wdm_extra: DecibelLoss(tc.bypass_wdm_extra_db),
            user_drop: tc
                .user_drop_km
                .map(|km| FiberSpan::with_attenuation(km, tc.attenuation_db_per_km)),
        }
    }

    pub fn sources(&self) -> Result<[ClassicalSource; 2]> {
        Ok([
            self.downstream.source(Direction::Downstream)?,
            self.upstream.source(Direction::Upstream)?,
        ])
    }

    pub fn detector(&self) -> DetectorSpec {
        let d = &self.detector;
        DetectorSpec {
            efficiency: d.efficiency,
            dark_rate_hz: d.dark_rate_hz,
            gate_width_s: d.gate_width_ps * 1e-12,
            clock_hz: d.clock_hz,
            filter_bandwidth_ghz: d.filter_bandwidth_ghz,
            noise_acceptance: d.noise_acceptance,
            misalignment_error: d.misalignment_error,
        }
    }

    pub fn decoy(&self) -> DecoyParams {
        let d = &self.decoy;
        DecoyParams {
            mu: d.mu,
            nu: d.nu,
            vacuum: d.vacuum,
            state_ratio: d.state_ratio,
            clock_hz: self.detector.clock_hz,
            sifting: d.sifting,
            ec_efficiency: d.ec_efficiency,
            qber_cap: d.qber_cap,
            qber_max: d.qber_max,
        }
    }

    /// Every problem with the configuration, each prefixed by its field path.
    pub fn validate(&self) -> std::result::Result<(), Vec<String>> {
        let mut out = Vec::new();
        if self.fiber_configs.is_empty() {
            out.push("fiber_configs: must not be empty".to_string());
        }
        if self.ratios.is_empty() {
            out.push("ratios: must not be empty".to_string());
        }
        for (i, &r) in self.ratios.iter().enumerate() {
            if r < 1 {
                out.push(format!("ratios[{i}]: ratio ≥ 1 (got {r})"));
            }
        }
        for (i, fc) in self.fiber_configs.iter().enumerate() {
            let t = self.topology(
                *fc,
                self.ratios.first().copied().unwrap_or(1).max(1),
                Architecture::Through,
            );
            if let Err(v) = crate::topology::validate(&t) {
                out.extend(v.into_iter().map(|v| format!("fiber_configs[{i}].{v}")));
            }
        }
        if self.fiber_configs.is_empty() {
            let t = self.topology(FiberConfig::new(0.0, 0.0), 1, Architecture::Through);
            if let Err(v) = crate::topology::validate(&t) {
                out.extend(v.into_iter().map(|v| format!("topology.{v}")));
            }
        }
        for (name, s) in [("downstream", &self.downstream), ("upstream", &self.upstream)] {
            if !s.power_dbm.is_finite() {
                out.push(format!("{name}.power_dbm: must be finite (got {})", s.power_dbm));
            }
            let src = ClassicalSource {
                direction: Direction::Downstream,
                launch_power: OpticalPower::ZERO,
                raman_per_km_ghz: s.raman_per_km_ghz,
                duty_factor: s.duty_factor,
            };
            if let Err(v) = src.validate() {
                out.extend(v.into_iter().map(|m| format!("{name}: {m}")));
            }
        }
        if let Err(v) = self.detector().validate() {
            out.extend(v.into_iter().map(|m| format!("detector: {m}")));
        }
        if let Err(v) = self.decoy().validate() {
            out.extend(v.into_iter().map(|m| format!("decoy: {m}")));
        }
        if !self.loss_budget_db.is_finite() {
            out.push(format!("loss_budget_db: must be finite (got {})", self.loss_budget_db));
        }
        if out.is_empty() {
            Ok(())
        } else {
            Err(out)
        }
    }
}

/// Model output next to a published value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceValues {
    pub table1_k: Option<f64>,
    pub k_deviation: Option<f64>,
    pub table2_bps: Option<f64>,
    pub bps_deviation: Option<f64>,
}

/// One (fiber config, ratio, architecture) record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioResult {
    pub fiber1_km: f64,
    pub fiber2_km: f64,
    pub ratio: u32,
    pub architecture: Architecture,
    /// Quantum-path loss of this layout.
    pub loss_db: Option<f64>,
    pub budget: Option<NoiseBudget>,
    /// `Q / Σd` of this layout's own budget.
    pub snr: Option<f64>,
    /// SNRs and K from the through-splitter budget; shared by both records of a cell.
    pub report: Option<SnrReport>,
    pub key: Option<KeyRateResult>,
    pub feasible: bool,
    pub annotations: Vec<String>,
    pub error: Option<String>,
    pub reference: Option<ReferenceValues>,
}

impl ScenarioResult {
    fn empty(fiber: FiberConfig, ratio: u32, architecture: Architecture) -> Self {
        ScenarioResult {
            fiber1_km: fiber.fiber1_km,
            fiber2_km: fiber.fiber2_km,
            ratio,
            architecture,
            loss_db: None,
            budget: None,
            snr: None,
            report: None,
            key: None,
            feasible: false,
            annotations: Vec::new(),
            error: None,
            reference: None,
        }
    }

    pub fn fiber(&self) -> FiberConfig {
        FiberConfig::new(self.fiber1_km, self.fiber2_km)
    }

    pub fn rate_bps(&self) -> Option<f64> {
        self.key.map(|k| k.rate_bps)
    }
}

/// Evaluate topology → noise → analysis → key rate for every cell.
///
/// Errors stay attached to their cell; the rest of the sweep still runs.
/// Output order is (fiber config, ratio, architecture) as listed in `cfg`.
pub fn run_sweep(cfg: &ScenarioConfig) -> Vec<ScenarioResult> {
    let table1 = ReferenceTable::table_one();
    let table2 = ReferenceTable::table_two();
    let mut out = Vec::new();
    for &fiber in &cfg.fiber_configs {
        for &ratio in &cfg.ratios {
            let mut cell = evaluate_cell(cfg, fiber, ratio);
            for rec in &mut cell {
                rec.reference = reference_values(rec, &table1, &table2);
            }
            out.extend(cell);
        }
    }
    out
}

fn evaluate_cell(cfg: &ScenarioConfig, fiber: FiberConfig, ratio: u32) -> Vec<ScenarioResult> {
    let archs = cfg.architectures.members();
    let mut records: Vec<ScenarioResult> = archs.iter().map(|&a| ScenarioResult::empty(fiber, ratio, a)).collect();

    let fail_all = |records: &mut Vec<ScenarioResult>, e: &Error| {
        for r in records.iter_mut() {
            r.error.get_or_insert_with(|| e.to_string());
        }
    };

    let through = match cfg.topology(fiber, ratio, Architecture::Through).validated() {
        Ok(t) => t,
        Err(e) => {
            fail_all(&mut records, &e);
            return records;
        }
    };
    let sources = match cfg.sources() {
        Ok(s) => s,
        Err(e) => {
            fail_all(&mut records, &e);
            return records;
        }
    };
    let det = cfg.detector();
    let decoy = cfg.decoy();

    let through_budget = noise_budget(&through, &sources, &det, decoy.mu, decoy.signal_fraction());
    let report = through_budget
        .as_ref()
        .map_err(|e| e.to_string())
        .and_then(|b| snr_report(b, ratio).map_err(|e| e.to_string()));
    let loss_infeasible = quantum_path_loss(&through).db() > cfg.loss_budget_db;

    for rec in &mut records {
        let t = through.with_architecture(rec.architecture);
        rec.loss_db = Some(quantum_path_loss(&t).db());
        match &report {
            Ok(r) => rec.report = Some(*r),
            Err(e) => rec.error = Some(e.clone()),
        }
        if rec.architecture == Architecture::Through && loss_infeasible {
            rec.annotations.push(LOSS_INFEASIBLE.to_string());
        }
        let evaluated = noise_budget(&t, &sources, &det, decoy.mu, decoy.signal_fraction()).and_then(|b| {
            rec.budget = Some(b);
            rec.snr = snr_through(&b).ok();
            let ch = budget_to_channel(&b, &t, &det)?;
            secure_key_rate(&ch, &decoy)
        });
        match evaluated {
            Ok(k) => {
                rec.feasible = k.feasible;
                if let Some(why) = k.infeasibility {
                    rec.annotations.push(why.reason().to_string());
                }
                rec.key = Some(k);
            }
            Err(e) => {
                rec.error.get_or_insert_with(|| e.to_string());
            }
        }
    }
    records
}

fn reference_values(rec: &ScenarioResult, t1: &ReferenceTable, t2: &ReferenceTable) -> Option<ReferenceValues> {
    let fiber = rec.fiber();
    let k_ref = t1.get(fiber, rec.ratio);
    let bps_ref = match rec.architecture {
        Architecture::Bypass => t2.get(fiber, rec.ratio),
        Architecture::Through => None,
    };
    if k_ref.is_none() && bps_ref.is_none() {
        return None;
    }
    let model_k = rec.report.map(|r| r.k);
    Some(ReferenceValues {
        table1_k: k_ref,
        k_deviation: k_ref.zip(model_k).map(|(r, m)| m - r),
        table2_bps: bps_ref,
        bps_deviation: bps_ref.zip(rec.rate_bps()).map(|(r, m)| m - r),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_sweep_cardinality_and_order() {
        let cfg = ScenarioConfig::default();
        let res = run_sweep(&cfg);
        assert_eq!(res.len(), 48);
        assert_eq!(
            (res[0].fiber1_km, res[0].ratio, res[0].architecture),
            (12.0, 4, Architecture::Through)
        );
        assert_eq!(res[1].architecture, Architecture::Bypass);
        assert_eq!((res[47].fiber1_km, res[47].fiber2_km, res[47].ratio), (12.0, 12.0, 128));
        assert!(
            res.iter().all(|r| r.error.is_none()),
            "{:?}",
            res.iter().find(|r| r.error.is_some())
        );
    }

    #[test]
    fn trivial_cell_has_unit_multiplier() {
        let mut cfg = ScenarioConfig {
            fiber_configs: vec![FiberConfig::new(0.0, 0.0)],
            ratios: vec![1],
            ..ScenarioConfig::default()
        };
        cfg.downstream.power_dbm = -200.0;
        cfg.upstream.power_dbm = -200.0;
        cfg.downstream.raman_per_km_ghz = 0.0;
        cfg.upstream.raman_per_km_ghz = 0.0;
        let res = run_sweep(&cfg);
        assert_eq!(res.len(), 2);
        let rep = res[0].report.unwrap();
        assert_eq!(rep.k, 1.0);
        assert_eq!(rep.snr_through, rep.snr_bypass);
    }

    #[test]
    fn bad_cells_keep_the_sweep_going() {
        let cfg = ScenarioConfig {
            fiber_configs: vec![FiberConfig::new(-1.0, 2.0), FiberConfig::new(12.0, 2.0)],
            ratios: vec![4],
            ..ScenarioConfig::default()
        };
        let res = run_sweep(&cfg);
        assert_eq!(res.len(), 4);
        assert!(res[0].error.as_deref().unwrap().contains("length ≥ 0"));
        assert!(res[1].error.is_some());
        assert!(res[2].error.is_none() && res[3].error.is_none());
    }

    #[test]
    fn validate_lists_all_problems() {
        let mut cfg = ScenarioConfig {
            ratios: vec![0, 4],
            ..ScenarioConfig::default()
        };
        cfg.detector.efficiency = 2.0;
        cfg.decoy.nu = 0.9;
        cfg.fiber_configs[1].fiber1_km = -3.0;
        let v = cfg.validate().unwrap_err();
        assert!(v.iter().any(|m| m.starts_with("ratios[0]")), "{v:?}");
        assert!(v.iter().any(|m| m.starts_with("detector")), "{v:?}");
        assert!(v.iter().any(|m| m.starts_with("decoy")), "{v:?}");
        assert!(
            v.iter().any(|m| m.starts_with("fiber_configs[1].fiber1.length_km")),
            "{v:?}"
        );
        assert!(ScenarioConfig::default().validate().is_ok());
    }

    #[test]
    fn config_json_round_trip_and_unknown_fields() {
        let cfg = ScenarioConfig::default();
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(ScenarioConfig::from_json_str(&text).unwrap(), cfg);
        assert_eq!(ScenarioConfig::from_json_str("{}").unwrap(), cfg);
        assert!(ScenarioConfig::from_json_str(r#"{"detector": {"eff": 0.2}}"#).is_err());
        let partial = ScenarioConfig::from_json_str(r#"{"ratios": [8], "upstream": {"power_dbm": -3}}"#).unwrap();
        assert_eq!(partial.ratios, vec![8]);
        assert_eq!(partial.upstream.raman_per_km_ghz, DEFAULT_RAMAN_PER_KM_GHZ);
    }
}
