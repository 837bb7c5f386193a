//! CSV / JSON serialization of sweep results and plot series.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use super::ScenarioResult;
use crate::error::{Error, Result};

/// Column order of the sweep CSV.
pub const CSV_COLUMNS: [&str; 16] = [
    "fiber1_km",
    "fiber2_km",
    "ratio",
    "architecture",
    "loss_db",
    "d0",
    "d1",
    "d2",
    "d3",
    "d4",
    "q_signal",
    "snr",
    "k",
    "qber",
    "rate_bps",
    "feasible",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

/// `%.9g`-style formatting: 9 significant digits, trailing zeros dropped.
pub fn format_sig9(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific notation");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        format!(
            "{}e{}{:02}",
            trim_zeros(mantissa.to_string()),
            if exp < 0 { '-' } else { '+' },
            exp.abs()
        )
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// Round to 9 significant digits, as written to CSV.
fn round9(x: f64) -> f64 {
    format_sig9(x).parse().unwrap_or(x)
}

struct Row {
    fields: Vec<(&'static str, Cell)>,
}

enum Cell {
    Num(Option<f64>),
    Int(u32),
    Text(String),
    Bool(bool),
}

fn row(r: &ScenarioResult) -> Row {
    let b = r.budget.as_ref();
    let num = |x: Option<f64>| Cell::Num(x.filter(|v| v.is_finite()));
    Row {
        fields: vec![
            ("fiber1_km", num(Some(r.fiber1_km))),
            ("fiber2_km", num(Some(r.fiber2_km))),
            ("ratio", Cell::Int(r.ratio)),
            ("architecture", Cell::Text(r.architecture.to_string())),
            ("loss_db", num(r.loss_db)),
            ("d0", num(b.map(|b| b.d0.hz()))),
            ("d1", num(b.map(|b| b.d1.hz()))),
            ("d2", num(b.map(|b| b.d2.hz()))),
            ("d3", num(b.map(|b| b.d3.hz()))),
            ("d4", num(b.map(|b| b.d4.hz()))),
            ("q_signal", num(b.map(|b| b.q_signal.hz()))),
            ("snr", num(r.snr)),
            ("k", num(r.report.map(|s| s.k))),
            ("qber", num(r.key.map(|k| k.e_mu))),
            ("rate_bps", num(r.rate_bps())),
            ("feasible", Cell::Bool(r.feasible)),
        ],
    }
}

/// CSV text with a header row; empty input gives the header only.
pub fn to_csv(results: &[ScenarioResult]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_COLUMNS).expect("in-memory write");
    for r in results {
        let rec: Vec<String> = row(r)
            .fields
            .into_iter()
            .map(|(_, c)| match c {
                Cell::Num(Some(x)) => format_sig9(x),
                Cell::Num(None) => String::new(),
                Cell::Int(i) => i.to_string(),
                Cell::Text(s) => s,
                Cell::Bool(b) => b.to_string(),
            })
            .collect();
        w.write_record(&rec).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}

/// JSON array with one object per record: the CSV columns plus a `notes` list.
pub fn to_json(results: &[ScenarioResult]) -> String {
    let records: Vec<Value> = results
        .iter()
        .map(|r| {
            let mut obj = Map::new();
            for (name, c) in row(r).fields {
                let v = match c {
                    Cell::Num(Some(x)) => json!(round9(x)),
                    Cell::Num(None) => Value::Null,
                    Cell::Int(i) => json!(i),
                    Cell::Text(s) => json!(s),
                    Cell::Bool(b) => json!(b),
                };
                obj.insert(name.to_string(), v);
            }
            let notes: Vec<String> = r.annotations.iter().cloned().chain(r.error.clone()).collect();
            obj.insert("notes".into(), json!(notes));
            Value::Object(obj)
        })
        .collect();
    let mut s = serde_json::to_string_pretty(&Value::Array(records)).expect("json");
    s.push('\n');
    s
}

/// One series per (fiber config, architecture): x = ratio, y = SNR and key rate.
pub fn plot_data_csv(results: &[ScenarioResult]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "series",
        "fiber1_km",
        "fiber2_km",
        "architecture",
        "ratio",
        "snr",
        "rate_bps",
    ])
    .expect("in-memory write");
    let mut keys: Vec<(String, &ScenarioResult)> = results
        .iter()
        .map(|r| (format!("{} {}", r.fiber().label(), r.architecture), r))
        .collect();
    // group by series, keep sweep order inside each series
    let mut order: Vec<String> = Vec::new();
    for (k, _) in &keys {
        if !order.contains(k) {
            order.push(k.clone());
        }
    }
    keys.sort_by_key(|(k, _)| order.iter().position(|o| o == k));
    let opt = |x: Option<f64>| x.filter(|v| v.is_finite()).map(format_sig9).unwrap_or_default();
    for (series, r) in keys {
        w.write_record([
            series,
            format_sig9(r.fiber1_km),
            format_sig9(r.fiber2_km),
            r.architecture.to_string(),
            r.ratio.to_string(),
            opt(r.snr),
            opt(r.rate_bps()),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}

/// Write through a temporary file in the destination directory, then rename.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let io = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(contents).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

pub fn emit(results: &[ScenarioResult], format: OutputFormat, path: &Path) -> Result<()> {
    let text = match format {
        OutputFormat::Csv => to_csv(results),
        OutputFormat::Json => to_json(results),
    };
    write_atomic(path, text.as_bytes())
}

pub fn emit_plot_data(results: &[ScenarioResult], path: &Path) -> Result<()> {
    write_atomic(path, plot_data_csv(results).as_bytes())
}
