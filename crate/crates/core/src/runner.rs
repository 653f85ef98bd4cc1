//! Experiment execution: result tables, CSV output and the run manifest.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::json;

use crate::allocator::Evaluator;
use crate::config::{parse_config, Experiment, ScenarioConfig};
use crate::error::{Error, Result};

pub const RESULTS_FILE: &str = "results.csv";
pub const MANIFEST_FILE: &str = "manifest.json";

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

/// Subcommand families; each accepts a fixed set of experiment kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Optimize,
    Sweep,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Optimize => "optimize",
            Command::Sweep => "sweep",
        }
    }

    pub fn accepts(self, experiment: &Experiment) -> bool {
        matches!(
            (self, experiment),
            (Command::Simulate, Experiment::Rate { .. })
                | (Command::Optimize, Experiment::OptimizeTwo)
                | (Command::Optimize, Experiment::Placement { .. })
                | (Command::Optimize, Experiment::OptimizeMulti { .. })
                | (Command::Sweep, Experiment::DominantSweep)
                | (Command::Sweep, Experiment::FairnessSweep { .. })
        )
    }
}

/// A results table plus optional summary values for the manifest.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub summary: Option<serde_json::Value>,
}

impl ResultTable {
    fn new(header: impl IntoIterator<Item = impl Into<String>>) -> Self {
        Self {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
            summary: None,
        }
    }

    fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    /// Comma-separated, header first, LF line endings.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for line in std::iter::once(&self.header).chain(&self.rows) {
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }
}

fn num(x: f64) -> String {
    format!("{x}")
}

fn flag(b: bool) -> String {
    u8::from(b).to_string()
}

/// Semicolon-joined list, safe inside a CSV field.
fn list<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(ToString::to_string).collect::<Vec<_>>().join(";")
}

/// Runs the experiment named by `cfg` and returns its table.
pub fn run_experiment(cfg: &ScenarioConfig) -> Result<ResultTable> {
    let ev = Evaluator::new(cfg.sim_inputs())?;
    let k_total = cfg.topology.k_total;
    match &cfg.experiment {
        Experiment::Rate { allocation } => {
            let topology = cfg.topology()?;
            let allocation = allocation.clone().unwrap_or_else(|| vec![k_total / 2; 2]);
            let report = ev.evaluate_allocation(&topology, &allocation)?;
            let mut t = ResultTable::new([
                "allocation",
                "connection_rates",
                "switch_rate",
                "per_mode_rate",
                "fairness",
                "fairness_degenerate",
            ]);
            t.push(vec![
                list(&allocation),
                list(&report.per_connection_rates),
                num(report.switch_rate),
                num(report.per_mode_rate),
                num(report.fairness.value),
                flag(report.fairness.degenerate),
            ]);
            Ok(t)
        }
        Experiment::OptimizeTwo => {
            let topology = cfg.topology()?;
            let [l1, l2] = [0, 1].map(|i| topology.clients[i].distance_km);
            let best = ev.optimize_two_client(l1, l2, k_total)?;
            let mut t = ResultTable::new(["k1", "k2", "rate", "per_mode_rate", "optimal"]);
            for e in &best.table {
                t.push(vec![
                    e.allocation[0].to_string(),
                    e.allocation[1].to_string(),
                    num(e.report.switch_rate),
                    num(e.report.per_mode_rate),
                    flag(e.allocation == best.allocation),
                ]);
            }
            Ok(t)
        }
        Experiment::Placement { l_total_km, grid } => {
            let res = ev.optimize_placement(*l_total_km, k_total, grid)?;
            let mut t = ResultTable::new(["fraction", "l1_km", "l2_km", "k1", "k2", "rate", "optimal"]);
            for p in &res.points {
                t.push(vec![
                    num(p.fraction),
                    num(p.l1_km),
                    num(p.l2_km),
                    p.allocation[0].to_string(),
                    p.allocation[1].to_string(),
                    num(p.rate),
                    flag(p.fraction == res.best_fraction),
                ]);
            }
            Ok(t)
        }
        Experiment::OptimizeMulti {
            fairness_threshold,
            enumerate_datacenter,
        } => {
            let topology = cfg.topology()?;
            let res = ev.optimize_multi_fair(&topology, *fairness_threshold, *enumerate_datacenter)?;
            let mut header: Vec<String> = topology.clients.iter().map(|c| format!("k_{}", c.id)).collect();
            header.extend(
                ["switch_rate", "fairness", "fairness_degenerate", "meets_threshold", "selected"].map(String::from),
            );
            let mut t = ResultTable::new(header);
            for e in &res.table {
                let mut row: Vec<String> = e.allocation.iter().map(ToString::to_string).collect();
                row.extend([
                    num(e.report.switch_rate),
                    num(e.report.fairness.value),
                    flag(e.report.fairness.degenerate),
                    flag(e.report.fairness.value < *fairness_threshold),
                    flag(e.allocation == res.allocation),
                ]);
                t.push(row);
            }
            t.summary = Some(json!({ "feasible": res.feasible, "allocation": res.allocation }));
            Ok(t)
        }
        Experiment::DominantSweep => {
            let topology = cfg.topology()?;
            let res = ev.dominant_client_sweep(&topology)?;
            let dc = topology.datacenter.expect("validated");
            let edge: Vec<usize> = (0..topology.clients.len())
                .filter(|&i| topology.clients[i].id != dc)
                .collect();
            let mut header: Vec<String> = edge
                .iter()
                .map(|&i| format!("k_{}_{}", topology.clients[i].id, dc))
                .collect();
            header.push("switch_rate".into());
            let mut t = ResultTable::new(header);
            for e in &res.rows {
                let mut row: Vec<String> = edge.iter().map(|&i| e.allocation[i].to_string()).collect();
                row.push(num(e.report.switch_rate));
                t.push(row);
            }
            t.summary = Some(json!({ "mean": res.mean, "std": res.std, "min": res.min, "max": res.max }));
            Ok(t)
        }
        Experiment::FairnessSweep { k_totals } => {
            let base = cfg.topology()?;
            let points = ev.fairness_sweep(&base, k_totals)?;
            let mut t = ResultTable::new(["k_total", "allocation", "fairness", "fairness_degenerate", "switch_rate"]);
            for p in &points {
                t.push(vec![
                    p.k_total.to_string(),
                    list(&p.allocation),
                    num(p.report.fairness.value),
                    flag(p.report.fairness.degenerate),
                    num(p.report.switch_rate),
                ]);
            }
            Ok(t)
        }
    }
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    status: &'a str,
    command: &'a str,
    version: &'a str,
    experiment: Option<&'a str>,
    seed: Option<u64>,
    config: Option<serde_json::Value>,
    config_path: Option<String>,
    results: Option<&'a str>,
    rows: Option<usize>,
    summary: Option<serde_json::Value>,
    error: Option<serde_json::Value>,
    started_unix_s: u64,
    wall_time_s: f64,
}

/// One CLI invocation.
#[derive(Debug, Clone)]
pub struct Invocation {
    pub command: Command,
    pub config_path: PathBuf,
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::Config(_) => "config",
        Error::Domain(_) => "domain",
        Error::Infeasible(_) => "infeasible",
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) => EXIT_CONFIG,
        _ => EXIT_RUNTIME,
    }
}

/// Loads, validates and runs a scenario, writing the results table and a
/// manifest into the output directory. The manifest is written on every
/// path, including failures. Returns the process exit code.
pub fn execute(inv: &Invocation) -> i32 {
    let started = Instant::now();
    let started_unix_s = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());

    let loaded = fs::read_to_string(&inv.config_path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", inv.config_path.display())))
        .and_then(|text| parse_config(&text))
        .and_then(|mut cfg| {
            if let Some(seed) = inv.seed {
                cfg.simulation.seed = crate::config::Seed(seed);
            }
            if !inv.command.accepts(&cfg.experiment) {
                return Err(Error::Config(format!(
                    "key `experiment.kind`: `{}` cannot run experiment `{}`",
                    inv.command.name(),
                    cfg.experiment.kind()
                )));
            }
            Ok(cfg)
        });

    let out_dir = inv.out_dir.clone().unwrap_or_else(|| match &loaded {
        Ok(cfg) => PathBuf::from(&cfg.output.path),
        Err(_) => PathBuf::from(crate::config::OutputConfig::default().path),
    });

    let (result, cfg) = match loaded {
        Ok(cfg) => (run_experiment(&cfg), Some(cfg)),
        Err(e) => (Err(e), None),
    };

    let mut status = EXIT_OK;
    let mut error = None;
    let mut table = None;
    match result {
        Ok(t) => match write_results(&out_dir, &t) {
            Ok(()) => table = Some(t),
            Err(e) => {
                status = EXIT_RUNTIME;
                error = Some(json!({ "kind": "io", "message": e }));
            }
        },
        Err(e) => {
            status = exit_code(&e);
            error = Some(json!({ "kind": error_kind(&e), "message": e.to_string() }));
        }
    }
    if let Some(err) = &error {
        eprintln!("error: {}", err["message"].as_str().unwrap_or_default());
    }

    let manifest = Manifest {
        status: if status == EXIT_OK { "ok" } else { "error" },
        command: inv.command.name(),
        version: env!("CARGO_PKG_VERSION"),
        experiment: cfg.as_ref().map(|c| c.experiment.kind()),
        seed: cfg.as_ref().map(|c| c.simulation.seed.0),
        config: cfg.as_ref().and_then(|c| serde_json::to_value(c).ok()),
        config_path: Some(inv.config_path.display().to_string()),
        results: table.as_ref().map(|_| RESULTS_FILE),
        rows: table.as_ref().map(|t| t.rows.len()),
        summary: table.as_ref().and_then(|t| t.summary.clone()),
        error,
        started_unix_s,
        wall_time_s: started.elapsed().as_secs_f64(),
    };
    if let Err(e) = write_manifest(&out_dir, &manifest) {
        eprintln!("error: cannot write manifest: {e}");
        return if status == EXIT_OK { EXIT_RUNTIME } else { status };
    }
    status
}

fn write_results(dir: &Path, table: &ResultTable) -> std::result::Result<(), String> {
    fs::create_dir_all(dir).map_err(|e| format!("cannot create {}: {e}", dir.display()))?;
    let path = dir.join(RESULTS_FILE);
    fs::write(&path, table.to_csv()).map_err(|e| format!("cannot write {}: {e}", path.display()))
}

fn write_manifest(dir: &Path, manifest: &Manifest<'_>) -> std::result::Result<(), String> {
    fs::create_dir_all(dir).map_err(|e| format!("cannot create {}: {e}", dir.display()))?;
    let mut text = serde_json::to_string_pretty(manifest).map_err(|e| e.to_string())?;
    let _ = writeln!(text);
    let path = dir.join(MANIFEST_FILE);
    fs::write(&path, text).map_err(|e| format!("cannot write {}: {e}", path.display()))
}
