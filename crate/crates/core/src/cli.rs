//! Command-line front end.
//!
//! `run` takes the argument list and two writers so tests can drive it without
//! spawning a process. Exit codes: 0 success, 1 runtime failure, 2 usage or
//! configuration error.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::analysis::snr_report;
use crate::error::Error;
use crate::keyrate::{budget_to_channel, secure_key_rate, ChannelModel};
use crate::noise::noise_budget;
use crate::quantities::CountRate;
use crate::scenario::{
    calibration_csv, calibration_report, compare_with_reference, emit, emit_plot_data, format_sig9, to_csv, to_json,
    FiberConfig, OutputFormat, ReferenceTable, ScenarioConfig, TableId,
};
use crate::topology::Architecture;
use crate::NoiseBudget;

/// Environment variable naming the default configuration file.
pub const CONFIG_ENV: &str = "GPON_QKD_CONFIG";

#[derive(Debug, Parser)]
#[command(
    name = "gpon-qkd",
    version,
    about = "QKD over a shared GPON fiber: link, Raman noise, SNR and key-rate model",
    arg_required_else_help = true
)]
struct Cli {
    /// JSON scenario configuration
    #[arg(long, global = true, env = CONFIG_ENV, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Override a value, e.g. `detector.efficiency=0.2` or `n=64`
    #[arg(long = "override", short = 's', global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,

    /// Write the main result here instead of standard output
    #[arg(long, short = 'o', global = true, value_name = "PATH")]
    output: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// SNR of both layouts and the bypass multiplier K at one point
    Snr,
    /// Decoy-state key rate at one point
    Keyrate,
    /// Sweep fiber configs × splitting ratios × layouts
    Sweep,
    /// Noise ratio r inferred from the embedded multiplier table
    Calibrate,
    /// Print the embedded reference tables
    Tables,
}

#[derive(Debug)]
enum CliError {
    Config(Vec<String>),
    Runtime(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Configuration(_)
            | Error::InvalidTopology(_)
            | Error::InvalidParams(_)
            | Error::InvalidQuantity { .. }
            | Error::WrongChannel(_) => CliError::Config(vec![e.to_string()]),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

/// Point-evaluation keys accepted as bare overrides by `snr` and `keyrate`.
#[derive(Debug, Default)]
struct Point {
    fiber1_km: Option<f64>,
    fiber2_km: Option<f64>,
    ratio: Option<u32>,
    architecture: Option<Architecture>,
    budget: [Option<f64>; 6],
    eta: Option<f64>,
    y0: Option<f64>,
}

impl Point {
    fn fiber(&self, cfg: &ScenarioConfig) -> FiberConfig {
        let base = cfg
            .fiber_configs
            .first()
            .copied()
            .unwrap_or(FiberConfig::new(12.0, 2.0));
        FiberConfig::new(
            self.fiber1_km.unwrap_or(base.fiber1_km),
            self.fiber2_km.unwrap_or(base.fiber2_km),
        )
    }

    fn ratio(&self) -> u32 {
        self.ratio.unwrap_or(32)
    }

    fn explicit_budget(&self) -> bool {
        self.budget.iter().any(Option::is_some)
    }
}

const BUDGET_KEYS: [&str; 6] = ["d0", "d1", "d2", "d3", "d4", "q"];

pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{text}");
                    0
                }
                _ => {
                    let _ = write!(stderr, "{text}");
                    2
                }
            };
        }
    };
    match execute(&cli, stdout, stderr) {
        Ok(()) => 0,
        Err(e) => {
            match &e {
                CliError::Config(msgs) => {
                    let _ = writeln!(stderr, "configuration error:");
                    for m in msgs {
                        let _ = writeln!(stderr, "  {m}");
                    }
                }
                CliError::Runtime(m) => {
                    let _ = writeln!(stderr, "error: {m}");
                }
            }
            e.code()
        }
    }
}

fn execute(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), CliError> {
    let base = match &cli.config {
        Some(p) => ScenarioConfig::load(p).map_err(|e| CliError::Config(vec![e.to_string()]))?,
        None => ScenarioConfig::default(),
    };
    let point_keys_allowed = matches!(cli.command, Command::Snr | Command::Keyrate);
    let (cfg, point) = apply_overrides(base, &cli.overrides, point_keys_allowed)?;
    cfg.validate().map_err(CliError::Config)?;

    match cli.command {
        Command::Snr => cmd_snr(cli, &cfg, &point, stdout),
        Command::Keyrate => cmd_keyrate(cli, &cfg, &point, stdout),
        Command::Sweep => cmd_sweep(cli, &cfg, stdout, stderr),
        Command::Calibrate => cmd_calibrate(cli, stdout),
        Command::Tables => cmd_tables(cli, stdout),
    }
}

/// Apply `key=value` overrides. Dotted keys and top-level keys address the
/// config schema; other bare keys are point parameters when allowed.
fn apply_overrides(
    cfg: ScenarioConfig,
    overrides: &[String],
    point_keys_allowed: bool,
) -> Result<(ScenarioConfig, Point), CliError> {
    let mut doc = serde_json::to_value(&cfg).expect("config serializes");
    let mut point = Point::default();
    let mut errors = Vec::new();

    for raw in overrides {
        let Some((key, value)) = raw.split_once('=') else {
            errors.push(format!("override `{raw}`: expected KEY=VALUE"));
            continue;
        };
        let key = key.trim();
        let parsed: Value = serde_json::from_str(value).unwrap_or_else(|_| Value::String(value.to_string()));
        let top = key.split('.').next().unwrap_or_default();
        if doc.get(top).is_some() {
            if let Err(m) = set_path(&mut doc, key, parsed) {
                errors.push(m);
            }
        } else if point_keys_allowed && !key.contains('.') {
            if let Err(m) = set_point(&mut point, key, &parsed) {
                errors.push(m);
            }
        } else {
            errors.push(format!("override `{key}`: unknown field"));
        }
    }
    if !errors.is_empty() {
        return Err(CliError::Config(errors));
    }
    let cfg: ScenarioConfig =
        serde_json::from_value(doc).map_err(|e| CliError::Config(vec![format!("override: {e}")]))?;
    Ok((cfg, point))
}

fn set_path(doc: &mut Value, key: &str, value: Value) -> Result<(), String> {
    let mut node = doc;
    for seg in key.split('.') {
        let next = match node {
            Value::Object(map) => map.get_mut(seg),
            Value::Array(items) => seg.parse::<usize>().ok().and_then(|i| items.get_mut(i)),
            _ => None,
        };
        node = next.ok_or_else(|| format!("override `{key}`: unknown field `{seg}`"))?;
    }
    *node = value;
    Ok(())
}

fn set_point(point: &mut Point, key: &str, value: &Value) -> Result<(), String> {
    let num = || {
        value
            .as_f64()
            .ok_or_else(|| format!("override `{key}`: expected a number"))
    };
    match key {
        "fiber1_km" => point.fiber1_km = Some(num()?),
        "fiber2_km" => point.fiber2_km = Some(num()?),
        "n" | "N" | "ratio" => {
            let n = value
                .as_u64()
                .and_then(|n| u32::try_from(n).ok())
                .ok_or_else(|| format!("override `{key}`: expected a positive integer"))?;
            point.ratio = Some(n);
        }
        "architecture" => {
            point.architecture = Some(
                serde_json::from_value(value.clone())
                    .map_err(|_| format!("override `{key}`: expected `through` or `bypass`"))?,
            )
        }
        "eta" => point.eta = Some(num()?),
        "y0" => point.y0 = Some(num()?),
        k => match BUDGET_KEYS.iter().position(|b| *b == k) {
            Some(i) => point.budget[i] = Some(num()?),
            None => return Err(format!("override `{key}`: unknown field")),
        },
    }
    Ok(())
}

fn write_text(stdout: &mut dyn Write, pairs: &[(&str, f64)]) -> std::io::Result<()> {
    for (k, v) in pairs {
        writeln!(stdout, "{k} = {}", format_sig9(*v))?;
    }
    Ok(())
}

fn deliver(cli: &Cli, stdout: &mut dyn Write, text: &str) -> Result<(), CliError> {
    match &cli.output {
        Some(p) => crate::scenario::write_atomic(p, text.as_bytes())?,
        None => stdout.write_all(text.as_bytes())?,
    }
    Ok(())
}

fn json_doc(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json");
    s.push('\n');
    s
}

fn physics_budget(cfg: &ScenarioConfig, point: &Point, arch: Architecture) -> Result<NoiseBudget, CliError> {
    let t = cfg.topology(point.fiber(cfg), point.ratio(), arch).validated()?;
    let decoy = cfg.decoy();
    Ok(noise_budget(
        &t,
        &cfg.sources()?,
        &cfg.detector(),
        decoy.mu,
        decoy.signal_fraction(),
    )?)
}

fn cmd_snr(cli: &Cli, cfg: &ScenarioConfig, point: &Point, stdout: &mut dyn Write) -> Result<(), CliError> {
    let n = point.ratio();
    let budget = if point.explicit_budget() {
        let v = |i: usize| CountRate::from_hz(point.budget[i].unwrap_or(0.0));
        NoiseBudget {
            architecture: Architecture::Through,
            ratio: n,
            clock_hz: cfg.detector.clock_hz,
            d0: v(0)?,
            d1: v(1)?,
            d2: v(2)?,
            d3: v(3)?,
            d4: v(4)?,
            q_signal: v(5)?,
        }
    } else {
        physics_budget(cfg, point, Architecture::Through)?
    };
    let report = snr_report(&budget, n).map_err(|e| CliError::Runtime(e.to_string()))?;
    let pairs = [
        ("n", n as f64),
        ("q", budget.q_signal.hz()),
        ("d0", budget.d0.hz()),
        ("d1", budget.d1.hz()),
        ("d2", budget.d2.hz()),
        ("d3", budget.d3.hz()),
        ("d4", budget.d4.hz()),
        ("snr_through", report.snr_through),
        ("snr_bypass", report.snr_bypass),
        ("k", report.k),
        ("r", report.ratio_r),
    ];
    let text = match cli.format {
        Format::Json => json_doc(&json!({ "ratio": n, "budget": budget, "report": report })),
        Format::Csv => {
            let head: Vec<&str> = pairs.iter().map(|p| p.0).collect();
            let vals: Vec<String> = pairs.iter().map(|p| format_sig9(p.1)).collect();
            format!("{}\n{}\n", head.join(","), vals.join(","))
        }
        Format::Text => {
            let mut buf = Vec::new();
            write_text(&mut buf, &pairs)?;
            String::from_utf8(buf).expect("utf-8")
        }
    };
    deliver(cli, stdout, &text)
}

fn cmd_keyrate(cli: &Cli, cfg: &ScenarioConfig, point: &Point, stdout: &mut dyn Write) -> Result<(), CliError> {
    let det = cfg.detector();
    let (channel, arch) = match point.eta {
        Some(eta) => (
            ChannelModel::new(eta, point.y0.unwrap_or(0.0), det.misalignment_error),
            None,
        ),
        None => {
            let arch = point.architecture.unwrap_or(Architecture::Bypass);
            let b = physics_budget(cfg, point, arch)?;
            let t = cfg.topology(point.fiber(cfg), point.ratio(), arch);
            (budget_to_channel(&b, &t, &det)?, Some(arch))
        }
    };
    let result = secure_key_rate(&channel, &cfg.decoy())?;
    let text = match cli.format {
        Format::Json => json_doc(&json!({ "architecture": arch, "channel": channel, "result": result })),
        Format::Text | Format::Csv => {
            let pairs = [
                ("eta", channel.eta),
                ("y0", channel.y0),
                ("q_mu", result.q_mu),
                ("e_mu", result.e_mu),
                ("q_nu", result.q_nu),
                ("e_nu", result.e_nu),
                ("y1_lower", result.y1_lower),
                ("e1_upper", result.e1_upper),
                ("q1", result.q1),
                ("rate_per_pulse", result.rate_per_pulse),
                ("rate_bps", result.rate_bps),
            ];
            let reason = result.infeasibility.map(|r| r.reason()).unwrap_or("");
            if cli.format == Format::Csv {
                let head: Vec<&str> = pairs.iter().map(|p| p.0).collect();
                let vals: Vec<String> = pairs.iter().map(|p| format_sig9(p.1)).collect();
                format!(
                    "{},feasible,reason\n{},{},{}\n",
                    head.join(","),
                    vals.join(","),
                    result.feasible,
                    reason
                )
            } else {
                let mut buf = Vec::new();
                write_text(&mut buf, &pairs)?;
                writeln!(buf, "feasible = {}", result.feasible)?;
                if !reason.is_empty() {
                    writeln!(buf, "reason = {reason}")?;
                }
                String::from_utf8(buf).expect("utf-8")
            }
        }
    };
    deliver(cli, stdout, &text)
}

fn plot_path_for(output: &Path) -> PathBuf {
    let stem = output
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "sweep".into());
    output.with_file_name(format!("{stem}.plot.csv"))
}

fn cmd_sweep(cli: &Cli, cfg: &ScenarioConfig, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), CliError> {
    let results = crate::scenario::run_sweep(cfg);
    let format = match cli.format {
        Format::Json => OutputFormat::Json,
        Format::Text | Format::Csv => OutputFormat::Csv,
    };

    let mut wrote_any = false;
    if let Some(p) = &cli.output {
        emit(&results, format, p)?;
        emit_plot_data(&results, &plot_path_for(p))?;
        writeln!(stderr, "wrote {} records to {}", results.len(), p.display())?;
        wrote_any = true;
    }
    if let Some(p) = &cfg.output.csv {
        emit(&results, OutputFormat::Csv, p)?;
        wrote_any = true;
    }
    if let Some(p) = &cfg.output.json {
        emit(&results, OutputFormat::Json, p)?;
        wrote_any = true;
    }
    if let Some(p) = &cfg.output.plot {
        emit_plot_data(&results, p)?;
    }
    if !wrote_any {
        let text = match format {
            OutputFormat::Csv => to_csv(&results),
            OutputFormat::Json => to_json(&results),
        };
        stdout.write_all(text.as_bytes())?;
    }

    let failed = results.iter().filter(|r| r.error.is_some()).count();
    if failed > 0 {
        writeln!(
            stderr,
            "{failed} of {} records failed; see notes in JSON output",
            results.len()
        )?;
    }
    if let Ok(dev) = compare_with_reference(&results, &ReferenceTable::table_two()) {
        if let Some((agree, total)) = dev.feasibility_agreement {
            writeln!(
                stderr,
                "key/no-key pattern matches the reference key-rate table in {agree} of {total} cells"
            )?;
        }
    }
    Ok(())
}

fn cmd_calibrate(cli: &Cli, stdout: &mut dyn Write) -> Result<(), CliError> {
    let cells = calibration_report(&ReferenceTable::table_one());
    let text = match cli.format {
        Format::Json => json_doc(&serde_json::to_value(&cells).expect("json")),
        Format::Csv => calibration_csv(&cells),
        Format::Text => {
            let mut s = format!(
                "{:<10} {:>6} {:>8} {:>14} {:>14} {:>12}\n",
                "fiber", "ratio", "K", "r", "K round trip", "rel error"
            );
            for c in &cells {
                let opt = |x: Option<f64>| x.map(format_sig9).unwrap_or_else(|| "-".into());
                s.push_str(&format!(
                    "{:<10} {:>6} {:>8} {:>14} {:>14} {:>12}{}\n",
                    FiberConfig::new(c.fiber1_km, c.fiber2_km).label(),
                    format!("1:{}", c.ratio),
                    format_sig9(c.k),
                    opt(c.r),
                    opt(c.k_round_trip),
                    opt(c.round_trip_rel_error),
                    c.flag.as_deref().map(|f| format!("  {f}")).unwrap_or_default()
                ));
            }
            s
        }
    };
    deliver(cli, stdout, &text)
}

fn cmd_tables(cli: &Cli, stdout: &mut dyn Write) -> Result<(), CliError> {
    let tables = [ReferenceTable::table_one(), ReferenceTable::table_two()];
    let name = |id: TableId| match id {
        TableId::I => "snr_multiplier",
        TableId::II => "key_rate_bps",
    };
    let text = match cli.format {
        Format::Json => json_doc(&json!({
            name(TableId::I): tables[0].cells,
            name(TableId::II): tables[1].cells,
        })),
        Format::Csv => {
            let mut s = String::from("table,fiber1_km,fiber2_km,ratio,value\n");
            for t in &tables {
                for c in &t.cells {
                    s.push_str(&format!(
                        "{},{},{},{},{}\n",
                        name(t.id),
                        format_sig9(c.fiber1_km),
                        format_sig9(c.fiber2_km),
                        c.ratio,
                        format_sig9(c.value)
                    ));
                }
            }
            s
        }
        Format::Text => {
            let mut s = String::new();
            for t in &tables {
                let title = match t.id {
                    TableId::I => "SNR multiplier K (bypass / through)",
                    TableId::II => "Bypass key rate (bit/s, 0 = no key)",
                };
                s.push_str(title);
                s.push('\n');
                s.push_str(&format!("{:<10}", "fiber"));
                for r in crate::scenario::REFERENCE_RATIOS {
                    s.push_str(&format!(" {:>8}", format!("1:{r}")));
                }
                s.push('\n');
                for &(f1, f2) in &crate::scenario::REFERENCE_FIBERS {
                    let fc = FiberConfig::new(f1, f2);
                    s.push_str(&format!("{:<10}", fc.label()));
                    for r in crate::scenario::REFERENCE_RATIOS {
                        s.push_str(&format!(" {:>8}", format_sig9(t.get(fc, r).unwrap_or(f64::NAN))));
                    }
                    s.push('\n');
                }
                s.push('\n');
            }
            s
        }
    };
    deliver(cli, stdout, &text)
}
