//! TOML scenario files.
//!
//! ```toml
//! [topology]
//! k_total = 20
//! datacenter = 4                  # optional
//! connections = [[1, 4], [2, 4]]  # optional: defaults to a star on the data
//!                                 # center, or every pair without one
//! [[topology.clients]]
//! id = 1
//! distance_km = 0.5
//!
//! [physics]                       # all optional
//! alpha_db_per_km = 0.2
//! sigma2_prep = 0.025
//! nu = "auto"                     # or a number
//! n_max = 10
//!
//! [simulation]                    # all optional
//! profile_trials = 10000
//! inner_samples = 100000
//! seed = 0
//! rate_mode = "expected-rank"     # or "per-round"
//!
//! [experiment]
//! kind = "rate"                   # optimize-two | placement | optimize-multi
//!                                 # | dominant-sweep | fairness-sweep
//! [output]                        # optional
//! path = "results"
//! format = "csv"
//! ```
//!
//! Every diagnostic names the offending key and, when it appears in the
//! document, its line.

use std::fmt;
use std::ops::Range;

use serde::{Deserialize, Serialize};
use toml::de::{DeTable, DeValue};
use toml::Spanned;

use crate::allocator::{
    Client, NuSetting, RateMode, SimInputs, Topology, DEFAULT_FAIRNESS_THRESHOLD, DEFAULT_INNER_SAMPLES,
    DEFAULT_PROFILE_TRIALS,
};
use crate::error::{Error, Result};
use crate::germ::{ClientId, ConnectionSet};
use crate::link::MIN_PROFILE_TRIALS;
use crate::noise::{discard_window_for, NoiseParams, DEFAULT_ALPHA_DB_PER_KM, DEFAULT_N_MAX, DEFAULT_SIGMA2_PREP};
use crate::steane::MIN_INNER_SAMPLES;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub topology: TopologyConfig,
    #[serde(default)]
    pub physics: PhysicsConfig,
    #[serde(default)]
    pub simulation: SimulationConfig,
    pub experiment: Experiment,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologyConfig {
    pub k_total: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub datacenter: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub connections: Option<Vec<[u32; 2]>>,
    /// Unused by `placement`, which derives both distances from the split.
    #[serde(default)]
    pub clients: Vec<ClientConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClientConfig {
    pub id: u32,
    pub distance_km: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhysicsConfig {
    pub alpha_db_per_km: f64,
    pub sigma2_prep: f64,
    pub nu: NuValue,
    pub n_max: u32,
}

impl Default for PhysicsConfig {
    fn default() -> Self {
        Self {
            alpha_db_per_km: DEFAULT_ALPHA_DB_PER_KM,
            sigma2_prep: DEFAULT_SIGMA2_PREP,
            nu: NuValue(NuSetting::Auto),
            n_max: DEFAULT_N_MAX,
        }
    }
}

impl PhysicsConfig {
    /// Discard window used for qubits serving a link of `l_km`.
    pub fn nu_for(&self, l_km: f64) -> Result<f64> {
        match self.nu.0 {
            NuSetting::Auto => Ok(discard_window_for(l_km)?.nu),
            NuSetting::Fixed(nu) => Ok(nu),
        }
    }
}

/// `"auto"` or a fixed window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "NuRepr", into = "NuRepr")]
pub struct NuValue(pub NuSetting);

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum NuRepr {
    Number(f64),
    Word(String),
}

impl TryFrom<NuRepr> for NuValue {
    type Error = String;
    fn try_from(r: NuRepr) -> std::result::Result<Self, String> {
        match r {
            NuRepr::Number(v) => Ok(NuValue(NuSetting::Fixed(v))),
            NuRepr::Word(w) if w == "auto" => Ok(NuValue(NuSetting::Auto)),
            NuRepr::Word(w) => Err(format!("expected \"auto\" or a number, got \"{w}\"")),
        }
    }
}

impl From<NuValue> for NuRepr {
    fn from(v: NuValue) -> Self {
        match v.0 {
            NuSetting::Auto => NuRepr::Word("auto".into()),
            NuSetting::Fixed(x) => NuRepr::Number(x),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulationConfig {
    pub profile_trials: u64,
    pub inner_samples: u64,
    pub seed: Seed,
    pub rate_mode: RateMode,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            profile_trials: DEFAULT_PROFILE_TRIALS,
            inner_samples: DEFAULT_INNER_SAMPLES,
            seed: Seed(0),
            rate_mode: RateMode::ExpectedRank,
        }
    }
}

/// A 64-bit seed. TOML integers stop at `i64::MAX`, so larger seeds are
/// written as decimal strings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "SeedRepr", into = "SeedRepr")]
pub struct Seed(pub u64);

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum SeedRepr {
    Int(i64),
    Text(String),
}

impl TryFrom<SeedRepr> for Seed {
    type Error = String;
    fn try_from(r: SeedRepr) -> std::result::Result<Self, String> {
        match r {
            SeedRepr::Int(i) => u64::try_from(i).map(Seed).map_err(|_| format!("seed must be >= 0, got {i}")),
            SeedRepr::Text(s) => s
                .parse()
                .map(Seed)
                .map_err(|_| format!("seed must be an unsigned 64-bit integer, got \"{s}\"")),
        }
    }
}

impl From<Seed> for SeedRepr {
    fn from(s: Seed) -> Self {
        match i64::try_from(s.0) {
            Ok(i) => SeedRepr::Int(i),
            Err(_) => SeedRepr::Text(s.0.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Experiment {
    /// Rates of one allocation; defaults to an even split between two clients.
    Rate {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        allocation: Option<Vec<u32>>,
    },
    OptimizeTwo,
    Placement {
        l_total_km: f64,
        grid: Vec<f64>,
    },
    OptimizeMulti {
        #[serde(default = "default_threshold")]
        fairness_threshold: f64,
        #[serde(default)]
        enumerate_datacenter: bool,
    },
    DominantSweep,
    FairnessSweep {
        k_totals: Vec<u32>,
    },
}

fn default_threshold() -> f64 {
    DEFAULT_FAIRNESS_THRESHOLD
}

impl Experiment {
    pub fn kind(&self) -> &'static str {
        match self {
            Experiment::Rate { .. } => "rate",
            Experiment::OptimizeTwo => "optimize-two",
            Experiment::Placement { .. } => "placement",
            Experiment::OptimizeMulti { .. } => "optimize-multi",
            Experiment::DominantSweep => "dominant-sweep",
            Experiment::FairnessSweep { .. } => "fairness-sweep",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    /// Directory receiving `results.csv` and `manifest.json`.
    pub path: String,
    pub format: OutputFormat,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            path: "results".into(),
            format: OutputFormat::Csv,
        }
    }
}

/// One step of a key path.
#[derive(Debug, Clone, PartialEq)]
enum Seg {
    Key(&'static str),
    Index(usize),
}

struct KeyPath(Vec<Seg>);

impl fmt::Display for KeyPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, seg) in self.0.iter().enumerate() {
            match seg {
                Seg::Key(k) if i == 0 => write!(f, "{k}")?,
                Seg::Key(k) => write!(f, ".{k}")?,
                Seg::Index(n) => write!(f, "[{n}]")?,
            }
        }
        Ok(())
    }
}

macro_rules! path {
    ($($seg:expr),* $(,)?) => { KeyPath(vec![$(Seg::from($seg)),*]) };
}

impl From<&'static str> for Seg {
    fn from(k: &'static str) -> Self {
        Seg::Key(k)
    }
}

impl From<usize> for Seg {
    fn from(i: usize) -> Self {
        Seg::Index(i)
    }
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].bytes().filter(|&b| b == b'\n').count() + 1
}

fn child<'a, 'i>(value: &'a DeValue<'i>, seg: &Seg) -> Option<&'a Spanned<DeValue<'i>>> {
    match (value, seg) {
        (DeValue::Table(t), Seg::Key(k)) => t.iter().find(|(key, _)| key.get_ref() == k).map(|(_, v)| v),
        (DeValue::Array(a), Seg::Index(i)) => a.get(*i),
        _ => None,
    }
}

/// Span of the deepest existing prefix of `path`.
fn span_of(root: &Spanned<DeTable<'_>>, path: &KeyPath) -> Option<Range<usize>> {
    let (first, rest) = path.0.split_first()?;
    let Seg::Key(k) = first else { return None };
    let (_, mut node) = root.get_ref().iter().find(|(key, _)| key.get_ref() == k)?;
    for seg in rest {
        match child(node.get_ref(), seg) {
            Some(next) => node = next,
            None => break,
        }
    }
    Some(node.span())
}

/// Key path of the tightest entry whose key or value span contains `offset`.
/// Entries are searched exhaustively because a `[header]` table's span does
/// not cover its body.
fn path_at(root: &Spanned<DeTable<'_>>, offset: usize) -> String {
    type Best = Option<(usize, String)>;
    fn consider(best: &mut Best, offset: usize, path: &str, spans: &[Range<usize>]) {
        for span in spans {
            if span.contains(&offset) && best.as_ref().is_none_or(|(len, _)| span.len() < *len) {
                *best = Some((span.len(), path.to_string()));
            }
        }
    }
    fn walk(prefix: &str, value: &DeValue<'_>, offset: usize, best: &mut Best) {
        match value {
            DeValue::Table(t) => {
                for (k, v) in t.iter() {
                    let path = if prefix.is_empty() {
                        k.get_ref().to_string()
                    } else {
                        format!("{prefix}.{}", k.get_ref())
                    };
                    consider(best, offset, &path, &[k.span(), v.span()]);
                    walk(&path, v.get_ref(), offset, best);
                }
            }
            DeValue::Array(a) => {
                for (i, v) in a.iter().enumerate() {
                    let path = format!("{prefix}[{i}]");
                    consider(best, offset, &path, &[v.span()]);
                    walk(&path, v.get_ref(), offset, best);
                }
            }
            _ => {}
        }
    }
    let mut best = None;
    walk("", &DeValue::Table(root.get_ref().clone()), offset, &mut best);
    best.map(|(_, p)| p).unwrap_or_default()
}

struct Checker<'a, 'i> {
    text: &'a str,
    root: &'a Spanned<DeTable<'i>>,
}

impl Checker<'_, '_> {
    fn fail<T>(&self, path: KeyPath, msg: impl fmt::Display) -> Result<T> {
        let line = span_of(self.root, &path).map(|s| line_of(self.text, s.start));
        Err(Error::Config(match line {
            Some(l) => format!("line {l}, key `{path}`: {msg}"),
            None => format!("key `{path}`: {msg}"),
        }))
    }

    fn check(&self, cfg: &ScenarioConfig) -> Result<()> {
        let topo = &cfg.topology;
        let needs_clients = !matches!(cfg.experiment, Experiment::Placement { .. });
        if needs_clients && topo.clients.len() < 2 {
            return self.fail(path!("topology", "clients"), "at least two clients are required");
        }
        let mut ids = std::collections::HashSet::new();
        for (i, c) in topo.clients.iter().enumerate() {
            if !(c.distance_km > 0.0 && c.distance_km.is_finite()) {
                return self.fail(
                    path!("topology", "clients", i, "distance_km"),
                    format!("distance must be > 0, got {}", c.distance_km),
                );
            }
            if !ids.insert(c.id) {
                return self.fail(path!("topology", "clients", i, "id"), format!("client {} defined twice", c.id));
            }
        }
        if let Some(dc) = topo.datacenter {
            if !ids.contains(&dc) {
                return self.fail(path!("topology", "datacenter"), format!("client {dc} is not defined"));
            }
        }
        if let Some(conns) = &topo.connections {
            for (i, [a, b]) in conns.iter().enumerate() {
                for id in [a, b] {
                    if !ids.contains(id) {
                        return self.fail(path!("topology", "connections", i), format!("client {id} is not defined"));
                    }
                }
                if a == b {
                    return self.fail(path!("topology", "connections", i), "a client cannot connect to itself");
                }
                if let Some(dc) = topo.datacenter {
                    if *a != dc && *b != dc {
                        return self.fail(
                            path!("topology", "connections", i),
                            "with a data center every connection must involve it",
                        );
                    }
                }
            }
        }

        let p = &cfg.physics;
        if !(p.alpha_db_per_km > 0.0 && p.alpha_db_per_km.is_finite()) {
            return self.fail(path!("physics", "alpha_db_per_km"), format!("must be > 0, got {}", p.alpha_db_per_km));
        }
        if !(p.sigma2_prep > 0.0 && p.sigma2_prep.is_finite()) {
            return self.fail(path!("physics", "sigma2_prep"), format!("must be > 0, got {}", p.sigma2_prep));
        }
        if let NuSetting::Fixed(nu) = p.nu.0 {
            if let Err(e) = NoiseParams::default().with_nu(nu).validate() {
                return self.fail(path!("physics", "nu"), e);
            }
        }
        if p.n_max < 5 {
            return self.fail(path!("physics", "n_max"), format!("must be at least 5, got {}", p.n_max));
        }

        let s = &cfg.simulation;
        if s.profile_trials < MIN_PROFILE_TRIALS {
            return self.fail(
                path!("simulation", "profile_trials"),
                format!("must be at least {MIN_PROFILE_TRIALS}, got {}", s.profile_trials),
            );
        }
        if s.inner_samples < MIN_INNER_SAMPLES {
            return self.fail(
                path!("simulation", "inner_samples"),
                format!("must be at least {MIN_INNER_SAMPLES}, got {}", s.inner_samples),
            );
        }

        if needs_clients {
            if let Err(e) = cfg.topology() {
                return self.fail(path!("topology", "k_total"), e);
            }
        } else if topo.k_total < 2 {
            return self.fail(path!("topology", "k_total"), "must be at least 2");
        }
        self.check_experiment(cfg)
    }

    fn check_experiment(&self, cfg: &ScenarioConfig) -> Result<()> {
        let topo = &cfg.topology;
        let two_plain = topo.datacenter.is_none() && topo.clients.len() == 2;
        match &cfg.experiment {
            Experiment::Rate { allocation } => match allocation {
                Some(a) => {
                    if let Err(e) = cfg.topology()?.check_allocation(a) {
                        return self.fail(path!("experiment", "allocation"), e);
                    }
                }
                None if !two_plain => {
                    return self.fail(path!("experiment"), "`allocation` is required unless there are exactly two clients")
                }
                None if !topo.k_total.is_multiple_of(2) => {
                    return self.fail(path!("experiment"), "an even split needs an even k_total; give `allocation`")
                }
                None => {}
            },
            Experiment::OptimizeTwo => {
                if !two_plain {
                    return self.fail(path!("experiment", "kind"), "optimize-two needs exactly two clients and no data center");
                }
            }
            Experiment::Placement { l_total_km, grid } => {
                if !(*l_total_km > 0.0 && l_total_km.is_finite()) {
                    return self.fail(path!("experiment", "l_total_km"), format!("must be > 0, got {l_total_km}"));
                }
                if !grid.contains(&0.5) {
                    return self.fail(path!("experiment", "grid"), "must contain 0.5");
                }
                if let Some(i) = grid.iter().position(|f| !(*f > 0.0 && *f < 1.0)) {
                    return self.fail(path!("experiment", "grid", i), "split fractions must lie in (0, 1)");
                }
            }
            Experiment::OptimizeMulti { fairness_threshold, .. } => {
                self.need_datacenter(cfg)?;
                if !(*fairness_threshold > 0.0) {
                    return self.fail(path!("experiment", "fairness_threshold"), "must be > 0");
                }
                self.check_datacenter_budget(cfg, topo.k_total, path!("topology", "k_total"))?;
            }
            Experiment::DominantSweep => {
                self.need_datacenter(cfg)?;
                let dc = topo.datacenter.expect("checked");
                let l_d = topo.clients.iter().find(|c| c.id == dc).expect("checked").distance_km;
                if let Some(i) = topo.clients.iter().position(|c| c.id != dc && c.distance_km >= l_d) {
                    return self.fail(
                        path!("topology", "clients", i, "distance_km"),
                        "the data center must be strictly farther than every client",
                    );
                }
                self.check_datacenter_budget(cfg, topo.k_total, path!("topology", "k_total"))?;
            }
            Experiment::FairnessSweep { k_totals } => {
                self.need_datacenter(cfg)?;
                if k_totals.is_empty() {
                    return self.fail(path!("experiment", "k_totals"), "must not be empty");
                }
                for (i, &k) in k_totals.iter().enumerate() {
                    self.check_datacenter_budget(cfg, k, path!("experiment", "k_totals", i))?;
                }
            }
        }
        Ok(())
    }

    fn need_datacenter(&self, cfg: &ScenarioConfig) -> Result<()> {
        if cfg.topology.datacenter.is_none() {
            return self.fail(
                path!("topology", "datacenter"),
                format!("{} needs a data center", cfg.experiment.kind()),
            );
        }
        Ok(())
    }

    fn check_datacenter_budget(&self, cfg: &ScenarioConfig, k_total: u32, at: KeyPath) -> Result<()> {
        let n = cfg.topology.clients.len() as u32 - 1;
        if !k_total.is_multiple_of(2) || k_total / 2 < n {
            return self.fail(at, format!("must be even with k_total/2 >= {n} (one link per client), got {k_total}"));
        }
        Ok(())
    }
}

impl ScenarioConfig {
    pub fn topology(&self) -> Result<Topology> {
        let t = &self.topology;
        let clients: Vec<Client> = t
            .clients
            .iter()
            .map(|c| Client {
                id: ClientId(c.id),
                distance_km: c.distance_km,
            })
            .collect();
        let dc = t.datacenter.map(ClientId);
        let connections = match (&t.connections, dc) {
            (Some(pairs), _) => ConnectionSet::new(pairs.iter().map(|&[a, b]| (ClientId(a), ClientId(b))))?,
            (None, Some(dc)) => ConnectionSet::star(dc, clients.iter().map(|c| c.id).filter(|&id| id != dc))?,
            (None, None) => ConnectionSet::new(
                clients
                    .iter()
                    .enumerate()
                    .flat_map(|(i, a)| clients[i + 1..].iter().map(move |b| (a.id, b.id))),
            )?,
        };
        Topology::new(clients, dc, connections, t.k_total)
    }

    pub fn sim_inputs(&self) -> SimInputs {
        let p = &self.physics;
        let s = &self.simulation;
        SimInputs {
            params: NoiseParams {
                alpha_db_per_km: p.alpha_db_per_km,
                sigma2_prep: p.sigma2_prep,
                nu: 0.0,
                n_max: p.n_max,
            },
            nu: p.nu.0,
            profile_trials: s.profile_trials,
            inner_samples: s.inner_samples,
            seed: s.seed.0,
            rate_mode: s.rate_mode,
        }
    }
}

/// Parses and validates a scenario document.
pub fn parse_config(text: &str) -> Result<ScenarioConfig> {
    let root = DeTable::parse(text).map_err(|e| syntax_error(text, None, &e))?;
    let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| syntax_error(text, Some(&root), &e))?;
    Checker { text, root: &root }.check(&cfg)?;
    Ok(cfg)
}

fn syntax_error(text: &str, root: Option<&Spanned<DeTable<'_>>>, e: &toml::de::Error) -> Error {
    let msg = e.message().trim();
    Error::Config(match e.span() {
        Some(span) => {
            let line = line_of(text, span.start);
            let key = root.map(|r| path_at(r, span.start)).filter(|k| !k.is_empty());
            match key {
                Some(k) => format!("line {line}, key `{k}`: {msg}"),
                None => format!("line {line}: {msg}"),
            }
        }
        None => msg.to_string(),
    })
}

/// Renders a config back to TOML; `parse_config(&render_config(c)) == c`.
pub fn render_config(cfg: &ScenarioConfig) -> Result<String> {
    toml::to_string(cfg).map_err(|e| Error::Config(format!("cannot render config: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[topology]
k_total = 20

[[topology.clients]]
id = 1
distance_km = 1.0

[[topology.clients]]
id = 2
distance_km = 1.0

[experiment]
kind = "rate"
"#;

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = parse_config(MINIMAL).unwrap();
        assert_eq!(cfg.physics.alpha_db_per_km, 0.2);
        assert_eq!(cfg.physics.n_max, 10);
        assert_eq!(cfg.physics.nu, NuValue(NuSetting::Auto));
        assert_eq!(cfg.simulation.profile_trials, 10_000);
        assert_eq!(cfg.output.format, OutputFormat::Csv);
        let multi = parse_config(
            "[topology]\nk_total = 8\ndatacenter = 3\nclients = [{id = 1, distance_km = 1.0}, {id = 2, distance_km = 1.0}, {id = 3, distance_km = 2.0}]\n[experiment]\nkind = \"optimize-multi\"\n",
        )
        .unwrap();
        assert_eq!(
            multi.experiment,
            Experiment::OptimizeMulti { fairness_threshold: 0.5, enumerate_datacenter: false }
        );
        assert_eq!(multi.topology().unwrap().connections.len(), 2);
    }

    #[test]
    fn negative_distance_names_key_and_line() {
        let text = MINIMAL.replacen("distance_km = 1.0", "distance_km = -1.0", 1);
        let err = parse_config(&text).unwrap_err().to_string();
        assert!(err.contains("topology.clients[0].distance_km"), "{err}");
        assert!(err.contains("line 7"), "{err}");
    }

    #[test]
    fn unknown_key_is_rejected_with_path() {
        let text = MINIMAL.replace("[experiment]", "[physics]\nalpha = 0.3\n\n[experiment]");
        let err = parse_config(&text).unwrap_err().to_string();
        assert!(err.contains("alpha"), "{err}");
        assert!(err.contains("line 14"), "{err}");
        assert!(err.contains("physics.alpha"), "{err}");
    }

    #[test]
    fn missing_required_key() {
        let err = parse_config("[experiment]\nkind = \"rate\"\n").unwrap_err().to_string();
        assert!(err.contains("topology"), "{err}");
    }

    #[test]
    fn auto_nu_resolves_from_table() {
        let cfg = parse_config(MINIMAL).unwrap();
        let nu = cfg.physics.nu_for(5.0).unwrap();
        assert!((nu - 3.0 * crate::noise::SQRT_PI / 20.0).abs() < 1e-15);
        let fixed = parse_config(&MINIMAL.replace("[experiment]", "[physics]\nnu = 0.1\n\n[experiment]")).unwrap();
        assert_eq!(fixed.physics.nu_for(5.0).unwrap(), 0.1);
        let bad = parse_config(&MINIMAL.replace("[experiment]", "[physics]\nnu = \"big\"\n\n[experiment]"));
        let err = bad.unwrap_err().to_string();
        assert!(err.contains("physics.nu"), "{err}");
    }

    #[test]
    fn trials_below_minimum() {
        let text = MINIMAL.replace("[experiment]", "[simulation]\nprofile_trials = 10\n\n[experiment]");
        let err = parse_config(&text).unwrap_err().to_string();
        assert!(err.contains("simulation.profile_trials"), "{err}");
    }

    #[test]
    fn undefined_client_reference() {
        let text = MINIMAL.replace("k_total = 20", "k_total = 20\nconnections = [[1, 9]]");
        let err = parse_config(&text).unwrap_err().to_string();
        assert!(err.contains("topology.connections[0]"), "{err}");
    }

    #[test]
    fn large_seed_round_trips() {
        let text = MINIMAL.replace("[experiment]", "[simulation]\nseed = \"18446744073709551615\"\n\n[experiment]");
        let cfg = parse_config(&text).unwrap();
        assert_eq!(cfg.simulation.seed, Seed(u64::MAX));
        assert_eq!(parse_config(&render_config(&cfg).unwrap()).unwrap(), cfg);
        assert!(parse_config(&MINIMAL.replace("[experiment]", "[simulation]\nseed = -3\n\n[experiment]")).is_err());
    }

    #[test]
    fn every_experiment_round_trips() {
        let dc = "[topology]\nk_total = 20\ndatacenter = 4\nclients = [{id = 1, distance_km = 0.5}, {id = 2, distance_km = 1.0}, {id = 3, distance_km = 2.0}, {id = 4, distance_km = 5.0}]\n";
        let docs = [
            MINIMAL.to_string(),
            MINIMAL.replace("kind = \"rate\"", "kind = \"rate\"\nallocation = [8, 12]"),
            MINIMAL.replace("kind = \"rate\"", "kind = \"optimize-two\""),
            MINIMAL.replace("kind = \"rate\"", "kind = \"placement\"\nl_total_km = 2.0\ngrid = [0.25, 0.5, 0.75]"),
            format!("{dc}[experiment]\nkind = \"optimize-multi\"\nfairness_threshold = 0.3\nenumerate_datacenter = true\n"),
            format!("{dc}[experiment]\nkind = \"dominant-sweep\"\n[physics]\nnu = 0.2\n[simulation]\nrate_mode = \"per-round\"\nseed = 99\n"),
            format!("{dc}[experiment]\nkind = \"fairness-sweep\"\nk_totals = [12, 20]\n[output]\npath = \"out/x\"\n"),
        ];
        for doc in docs {
            let cfg = parse_config(&doc).unwrap_or_else(|e| panic!("{e}\n{doc}"));
            let rendered = render_config(&cfg).unwrap();
            assert_eq!(parse_config(&rendered).unwrap(), cfg, "{rendered}");
        }
    }

    #[test]
    fn experiment_preconditions() {
        let dc_far = "[topology]\nk_total = 20\ndatacenter = 3\nclients = [{id = 1, distance_km = 0.5}, {id = 2, distance_km = 6.0}, {id = 3, distance_km = 5.0}]\n[experiment]\nkind = \"dominant-sweep\"\n";
        assert!(parse_config(dc_far).unwrap_err().to_string().contains("topology.clients[1].distance_km"));
        let no_dc = MINIMAL.replace("kind = \"rate\"", "kind = \"fairness-sweep\"\nk_totals = [10]");
        assert!(parse_config(&no_dc).unwrap_err().to_string().contains("topology.datacenter"));
        let bad_grid = MINIMAL.replace("kind = \"rate\"", "kind = \"placement\"\nl_total_km = 2.0\ngrid = [0.25]");
        assert!(parse_config(&bad_grid).unwrap_err().to_string().contains("experiment.grid"));
        let bad_alloc = MINIMAL.replace("kind = \"rate\"", "kind = \"rate\"\nallocation = [1, 2]");
        assert!(parse_config(&bad_alloc).unwrap_err().to_string().contains("experiment.allocation"));
    }
}
