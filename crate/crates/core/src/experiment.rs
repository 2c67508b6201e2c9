//! Config-driven experiment runner behind the `vr3c run` command.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::heterogeneous::{
    self, brute_force_mmkp, build_mmkp, greedy_3d_caching, greedy_caching_computing, multi_start, CccpConfig,
    SolveReport, SCHEMA_VERSION,
};
use crate::homogeneous::{self, brute_force_problem2, closed_form, expand_counts, SweepAxes};
use crate::instance::Instance;
use crate::lp::{DenseSimplex, LpBackend};
use crate::model::{self, JointPolicy};
use crate::sim;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    HomogClosedForm,
    HomogOracle,
    HomogSweep,
    HeteroCccp,
    HeteroBaselines,
    HeteroOracle,
    Simulate,
}

impl Mode {
    pub const ALL: [Mode; 7] = [
        Mode::HomogClosedForm,
        Mode::HomogOracle,
        Mode::HomogSweep,
        Mode::HeteroCccp,
        Mode::HeteroBaselines,
        Mode::HeteroOracle,
        Mode::Simulate,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::HomogClosedForm => "homog-closed-form",
            Mode::HomogOracle => "homog-oracle",
            Mode::HomogSweep => "homog-sweep",
            Mode::HeteroCccp => "hetero-cccp",
            Mode::HeteroBaselines => "hetero-baselines",
            Mode::HeteroOracle => "hetero-oracle",
            Mode::Simulate => "simulate",
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Mode::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| format!("unknown mode `{s}`"))
    }
}

/// Where the simulated policy comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolicySource {
    #[default]
    HomogClosedForm,
    Cccp,
    Greedy3dCaching,
    GreedyCachingComputing,
    AllMec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    pub requests: usize,
    pub policy: PolicySource,
    pub routes_csv: bool,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            requests: 1_000_000,
            policy: PolicySource::default(),
            routes_csv: true,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CccpOverrides {
    pub mu: Option<f64>,
    pub delta: Option<f64>,
    pub max_iters: Option<usize>,
    pub restarts: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: Option<Mode>,
    pub instance: Option<PathBuf>,
    #[serde(default)]
    pub sweep: Option<SweepAxes>,
    #[serde(default)]
    pub cccp: CccpOverrides,
    #[serde(default)]
    pub simulate: SimulateConfig,
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
    /// Attach the final simplex tableau of every subproblem to the output.
    #[serde(default)]
    pub dump_lp: bool,
    #[serde(skip)]
    pub source: Option<PathBuf>,
}

impl ExperimentConfig {
    /// Reads a config file; a relative `instance` path is taken relative to
    /// the config's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        let mut cfg: ExperimentConfig = serde_json::from_str(&text).map_err(|e| Error::Config {
            path: path.to_path_buf(),
            message: format!("line {}, column {}: {e}", e.line(), e.column()),
        })?;
        if let (Some(inst), Some(dir)) = (&cfg.instance, path.parent()) {
            if inst.is_relative() {
                cfg.instance = Some(dir.join(inst));
            }
        }
        cfg.source = Some(path.to_path_buf());
        Ok(cfg)
    }

    pub fn cccp_config(&self) -> CccpConfig {
        let d = CccpConfig::default();
        CccpConfig {
            mu: self.cccp.mu.unwrap_or(d.mu),
            delta: self.cccp.delta.unwrap_or(d.delta),
            max_iters: self.cccp.max_iters.unwrap_or(d.max_iters),
            restarts: self.cccp.restarts.unwrap_or(d.restarts),
            seed: self.seed,
        }
    }
}

/// Files produced by one run, keyed by file name.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub files: Vec<(String, String)>,
}

impl RunOutput {
    pub fn get(&self, name: &str) -> Option<&str> {
        self.files.iter().find(|(n, _)| n == name).map(|(_, c)| c.as_str())
    }

    pub fn write_to(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|source| Error::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        for (name, content) in &self.files {
            let path = dir.join(name);
            std::fs::write(&path, content).map_err(|source| Error::Io { path, source })?;
        }
        Ok(())
    }
}

fn config_error(cfg: &ExperimentConfig, message: impl Into<String>) -> Error {
    Error::Config {
        path: cfg.source.clone().unwrap_or_else(|| PathBuf::from("<flags>")),
        message: message.into(),
    }
}

fn pretty(value: &impl Serialize) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

fn baselines_csv(report: &SolveReport) -> String {
    let mut out = String::from("policy,rate,gain_over_mec\n");
    let mec = report.baselines.map(|b| b.all_mec);
    let gain = |r: f64| mec.map(|m| crate::fmt_num(1.0 - r / m)).unwrap_or_default();
    if let Some(b) = report.baselines {
        for (name, rate) in [
            ("all-mec", b.all_mec),
            ("greedy-3d-caching", b.greedy_3d_caching),
            ("greedy-caching-computing", b.greedy_caching_computing),
        ] {
            let _ = writeln!(out, "{name},{},{}", crate::fmt_num(rate), gain(rate));
        }
    }
    if !report.restarts.is_empty() || report.best_restart.is_some() {
        let _ = writeln!(out, "cccp,{},{}", crate::fmt_num(report.rate), gain(report.rate));
    }
    if let Some(o) = report.oracle_rate {
        let _ = writeln!(out, "oracle,{},{}", crate::fmt_num(o), gain(o));
    }
    out
}

fn lp_dumps(report: &SolveReport) -> Option<String> {
    let mut out = String::new();
    for r in &report.restarts {
        if let Some(t) = &r.trace {
            for (k, tab) in t.tableaus.iter().enumerate() {
                let _ = writeln!(out, "== restart {} iteration {} ==\n{tab}", r.index, k + 1);
            }
        }
    }
    (!out.is_empty()).then_some(out)
}

/// Executes `cfg` and returns the output files without touching the disk.
pub fn run(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let mode = cfg.mode.ok_or_else(|| config_error(cfg, "no mode given"))?;
    let path = cfg
        .instance
        .as_ref()
        .ok_or_else(|| config_error(cfg, "no instance file given"))?;
    let instance = Instance::load(path)?;
    let backend = DenseSimplex {
        dump_tableau: cfg.dump_lp,
        ..DenseSimplex::default()
    };
    run_on(mode, cfg, &instance, &backend)
}

pub fn run_on(mode: Mode, cfg: &ExperimentConfig, instance: &Instance, backend: &dyn LpBackend) -> Result<RunOutput> {
    let mut files = Vec::new();
    let heterogeneous_viewpoints = || {
        if instance.viewpoints.is_empty() {
            Err(config_error(cfg, format!("mode {} needs a viewpoint list", mode.as_str())))
        } else {
            Ok(&instance.viewpoints)
        }
    };
    match mode {
        Mode::HomogClosedForm => {
            let h = instance.homogeneous_instance()?;
            let sol = closed_form(&h)?;
            files.push((
                "result.json".into(),
                pretty(&json!({
                    "schema": SCHEMA_VERSION,
                    "mode": mode.as_str(),
                    "crossover_frequency": h.crossover()?,
                    "capacity": h.capacity(),
                    "solution": sol,
                })),
            ));
        }
        Mode::HomogOracle => {
            let h = instance.homogeneous_instance()?;
            let sol = closed_form(&h)?;
            let (counts, rate) = brute_force_problem2(&h)?;
            files.push((
                "result.json".into(),
                pretty(&json!({
                    "schema": SCHEMA_VERSION,
                    "mode": mode.as_str(),
                    "closed_form": sol,
                    "oracle": {"counts": counts, "rate": rate},
                    "agree": counts == sol.counts,
                })),
            ));
        }
        Mode::HomogSweep => {
            let h = instance.homogeneous_instance()?;
            let axes = cfg
                .sweep
                .as_ref()
                .ok_or_else(|| config_error(cfg, "homog-sweep needs a `sweep` block"))?;
            let rows = homogeneous::sweep(&h, axes);
            let ok = rows.iter().filter(|r| r.rate.is_some()).count();
            files.push(("sweep.csv".into(), homogeneous::sweep_csv(&rows)));
            files.push((
                "result.json".into(),
                pretty(&json!({
                    "schema": SCHEMA_VERSION,
                    "mode": mode.as_str(),
                    "points": rows.len(),
                    "solved": ok,
                    "failed": rows.len() - ok,
                })),
            ));
        }
        Mode::HeteroCccp | Mode::HeteroOracle => {
            let vps = heterogeneous_viewpoints()?;
            let inst = build_mmkp(vps, &instance.device);
            let mut report = multi_start(&inst, &cfg.cccp_config(), backend);
            report.baselines = Some(heterogeneous::baseline_rates(&inst, vps, &instance.device));
            if mode == Mode::HeteroOracle {
                let (_, rate) = brute_force_mmkp(&inst)?;
                report.oracle_rate = Some(rate);
            }
            files.push(("baselines.csv".into(), baselines_csv(&report)));
            if let Some(dump) = lp_dumps(&report) {
                files.push(("lp_tableaus.txt".into(), dump));
            }
            files.push(("result.json".into(), pretty(&report)));
        }
        Mode::HeteroBaselines => {
            let vps = heterogeneous_viewpoints()?;
            let inst = build_mmkp(vps, &instance.device);
            let baselines = heterogeneous::baseline_rates(&inst, vps, &instance.device);
            let report = SolveReport {
                schema: SCHEMA_VERSION.into(),
                policy: greedy_caching_computing(vps, &instance.device),
                rate: baselines.greedy_caching_computing,
                best_restart: None,
                mec_fallback: false,
                restarts: Vec::new(),
                baselines: Some(baselines),
                oracle_rate: None,
            };
            files.push(("baselines.csv".into(), baselines_csv(&report)));
            files.push((
                "result.json".into(),
                pretty(&json!({
                    "schema": SCHEMA_VERSION,
                    "mode": mode.as_str(),
                    "baselines": baselines,
                })),
            ));
        }
        Mode::Simulate => {
            let (policy, vps, dev) = match cfg.simulate.policy {
                PolicySource::HomogClosedForm => {
                    let h = instance.homogeneous_instance()?;
                    let sol = closed_form(&h)?;
                    (expand_counts(sol.counts, h.n)?, h.viewpoints(), h.dev)
                }
                source => {
                    let vps = heterogeneous_viewpoints()?.clone();
                    let dev = instance.device;
                    let policy = match source {
                        PolicySource::Cccp => multi_start(&build_mmkp(&vps, &dev), &cfg.cccp_config(), backend).policy,
                        PolicySource::Greedy3dCaching => greedy_3d_caching(&vps, &dev),
                        PolicySource::GreedyCachingComputing => greedy_caching_computing(&vps, &dev),
                        _ => JointPolicy::all_mec(vps.len()),
                    };
                    (policy, vps, dev)
                }
            };
            let violations = model::validate_policy(&policy, &vps, &dev);
            if !violations.is_empty() {
                return Err(Error::InvalidPolicy(violations));
            }
            let pops: Vec<f64> = vps.iter().map(|v| v.popularity).collect();
            let stream = sim::generate_stream(&pops, cfg.simulate.requests, cfg.seed)?;
            let result = sim::simulate(&policy, &vps, &dev, &stream)?;
            if cfg.simulate.routes_csv {
                files.push(("routes.csv".into(), result.route_histogram_csv()));
            }
            files.push((
                "result.json".into(),
                pretty(&json!({
                    "schema": SCHEMA_VERSION,
                    "mode": mode.as_str(),
                    "policy": policy,
                    "simulation": result,
                })),
            ));
        }
    }
    Ok(RunOutput { files })
}

/// Machine-readable error record written when a run fails.
pub fn error_record(err: &Error) -> String {
    let mut record = json!({
        "schema": SCHEMA_VERSION,
        "error": err.kind(),
        "message": err.to_string(),
    });
    match err {
        Error::Config { path, .. } | Error::Io { path, .. } => {
            record["file"] = json!(path);
        }
        Error::InstanceParse { path, line, column, .. } => {
            record["file"] = json!(path);
            record["line"] = json!(line);
            record["column"] = json!(column);
        }
        _ => {}
    }
    pretty(&record)
}

/// Process exit code for a failed run.
pub fn exit_code(err: &Error) -> i32 {
    match err.kind() {
        "ConfigError" => 2,
        "InstanceParseError" => 3,
        _ => 4,
    }
}
