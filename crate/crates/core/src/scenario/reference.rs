//! Published field-trial results and the calibration/comparison built on them.

use serde::{Deserialize, Serialize};

use super::{FiberConfig, ScenarioResult};
use crate::analysis::{calibrate_ratio, k_from_ratio};
use crate::error::{Error, Result};
use crate::topology::Architecture;

/// Fiber 1 + fiber 2 lengths of the field trial, in table row order.
pub const REFERENCE_FIBERS: [(f64, f64); 4] = [(12.0, 2.0), (15.0, 2.0), (20.0, 2.0), (12.0, 12.0)];
/// Splitting ratios of the field trial, in table column order.
pub const REFERENCE_RATIOS: [u32; 6] = [4, 8, 16, 32, 64, 128];

/// Measured SNR multiplier of the bypass layout.
const TABLE_ONE: [[f64; 6]; 4] = [
    [2.09, 3.89, 6.03, 8.46, 10.24, 11.84],
    [2.06, 3.68, 5.16, 6.90, 7.92, 8.55],
    [2.24, 3.41, 4.15, 6.49, 7.22, 8.22],
    [3.86, 6.40, 11.08, 24.04, 24.04, 34.73],
];

/// Measured bypass-layout key rate in bit/s; 0 means no key.
const TABLE_TWO: [[f64; 6]; 4] = [
    [10900.0, 10600.0, 10400.0, 10300.0, 35000.0, 0.0],
    [5130.0, 4400.0, 4300.0, 0.0, 0.0, 0.0],
    [4200.0, 3700.0, 1900.0, 0.0, 0.0, 0.0],
    [2700.0, 0.0, 0.0, 0.0, 0.0, 0.0],
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TableId {
    /// SNR multiplier K.
    I,
    /// Key rate, bit/s.
    II,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceCell {
    pub fiber1_km: f64,
    pub fiber2_km: f64,
    pub ratio: u32,
    pub value: f64,
}

impl ReferenceCell {
    pub fn fiber(&self) -> FiberConfig {
        FiberConfig::new(self.fiber1_km, self.fiber2_km)
    }

    pub fn key(&self) -> String {
        format!("{} 1:{}", self.fiber().label(), self.ratio)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceTable {
    pub id: TableId,
    /// Row-major: fiber config, then ratio.
    pub cells: Vec<ReferenceCell>,
}

impl ReferenceTable {
    fn build(id: TableId, values: &[[f64; 6]; 4]) -> Self {
        let cells = REFERENCE_FIBERS
            .iter()
            .zip(values)
            .flat_map(|(&(f1, f2), row)| {
                REFERENCE_RATIOS
                    .iter()
                    .zip(row)
                    .map(move |(&ratio, &value)| ReferenceCell {
                        fiber1_km: f1,
                        fiber2_km: f2,
                        ratio,
                        value,
                    })
            })
            .collect();
        ReferenceTable { id, cells }
    }

    pub fn table_one() -> Self {
        Self::build(TableId::I, &TABLE_ONE)
    }

    pub fn table_two() -> Self {
        Self::build(TableId::II, &TABLE_TWO)
    }

    pub fn get(&self, fiber: FiberConfig, ratio: u32) -> Option<f64> {
        self.cells
            .iter()
            .find(|c| c.fiber() == fiber && c.ratio == ratio)
            .map(|c| c.value)
    }

    /// Value in the same row at the smallest splitting ratio.
    fn row_baseline(&self, fiber: FiberConfig) -> Option<f64> {
        self.cells
            .iter()
            .filter(|c| c.fiber() == fiber)
            .min_by_key(|c| c.ratio)
            .map(|c| c.value)
    }
}

/// Noise ratio inferred from one measured multiplier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationCell {
    pub fiber1_km: f64,
    pub fiber2_km: f64,
    pub ratio: u32,
    pub k: f64,
    pub r: Option<f64>,
    pub k_round_trip: Option<f64>,
    pub round_trip_rel_error: Option<f64>,
    /// Set when the measured K is outside what the model can produce.
    pub flag: Option<String>,
}

/// Invert the multiplier formula cell by cell. Out-of-range cells are flagged, not dropped.
pub fn calibration_report(table: &ReferenceTable) -> Vec<CalibrationCell> {
    table
        .cells
        .iter()
        .map(|c| {
            let mut out = CalibrationCell {
                fiber1_km: c.fiber1_km,
                fiber2_km: c.fiber2_km,
                ratio: c.ratio,
                k: c.value,
                r: None,
                k_round_trip: None,
                round_trip_rel_error: None,
                flag: None,
            };
            match calibrate_ratio(c.value, c.ratio).and_then(|r| Ok((r, k_from_ratio(r, c.ratio)?))) {
                Ok((r, k_back)) => {
                    out.r = Some(r);
                    out.k_round_trip = Some(k_back);
                    out.round_trip_rel_error = Some(((k_back - c.value) / c.value).abs());
                }
                Err(e) => out.flag = Some(e.to_string()),
            }
            out
        })
        .collect()
}

pub fn calibration_csv(cells: &[CalibrationCell]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let opt = |x: Option<f64>| x.map(super::format_sig9).unwrap_or_default();
    w.write_record([
        "fiber1_km",
        "fiber2_km",
        "ratio",
        "k",
        "r",
        "k_round_trip",
        "round_trip_rel_error",
        "flag",
    ])
    .expect("in-memory write");
    for c in cells {
        w.write_record([
            super::format_sig9(c.fiber1_km),
            super::format_sig9(c.fiber2_km),
            c.ratio.to_string(),
            super::format_sig9(c.k),
            opt(c.r),
            opt(c.k_round_trip),
            opt(c.round_trip_rel_error),
            c.flag.clone().unwrap_or_default(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationCell {
    pub fiber1_km: f64,
    pub fiber2_km: f64,
    pub ratio: u32,
    pub reference: f64,
    pub model: Option<f64>,
    pub abs_deviation: Option<f64>,
    /// Undefined for zero reference values.
    pub rel_deviation: Option<f64>,
    /// Table II only: model and reference agree on key / no key.
    pub feasibility_agrees: Option<bool>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationReport {
    pub table: TableId,
    pub cells: Vec<DeviationCell>,
    /// Table II only: cells whose feasibility pattern matches, out of all cells.
    pub feasibility_agreement: Option<(usize, usize)>,
}

/// Cell-by-cell deviation of a sweep from a reference table.
///
/// Table I is compared with the cell multiplier K, Table II with the bypass
/// record's key rate. Every reference cell must be present in `results`.
pub fn compare_with_reference(results: &[ScenarioResult], table: &ReferenceTable) -> Result<DeviationReport> {
    let wanted = match table.id {
        TableId::I => None,
        TableId::II => Some(Architecture::Bypass),
    };
    let mut missing = Vec::new();
    let mut cells = Vec::with_capacity(table.cells.len());
    for c in &table.cells {
        let rec = results
            .iter()
            .find(|r| r.fiber() == c.fiber() && r.ratio == c.ratio && wanted.is_none_or(|a| r.architecture == a));
        let Some(rec) = rec else {
            missing.push(c.key());
            continue;
        };
        let model = match table.id {
            TableId::I => rec.report.map(|r| r.k),
            TableId::II => Some(if rec.feasible {
                rec.rate_bps().unwrap_or(0.0)
            } else {
                0.0
            }),
        };
        let abs_deviation = model.map(|m| m - c.value);
        let rel_deviation = abs_deviation.filter(|_| c.value != 0.0).map(|d| d / c.value);
        let feasibility_agrees = match table.id {
            TableId::I => None,
            TableId::II => model.map(|m| (m > 0.0) == (c.value > 0.0)),
        };
        let note = match (table.id, table.row_baseline(c.fiber())) {
            (TableId::II, Some(base)) if c.value > base => {
                Some(format!("anomalous: exceeds same-row 1:{} value", REFERENCE_RATIOS[0]))
            }
            _ => None,
        };
        cells.push(DeviationCell {
            fiber1_km: c.fiber1_km,
            fiber2_km: c.fiber2_km,
            ratio: c.ratio,
            reference: c.value,
            model,
            abs_deviation,
            rel_deviation,
            feasibility_agrees,
            note,
        });
    }
    if !missing.is_empty() {
        return Err(Error::ReferenceMismatch { missing });
    }
    let feasibility_agreement = match table.id {
        TableId::I => None,
        TableId::II => Some((
            cells.iter().filter(|c| c.feasibility_agrees == Some(true)).count(),
            cells.len(),
        )),
    };
    Ok(DeviationReport {
        table: table.id,
        cells,
        feasibility_agreement,
    })
}
