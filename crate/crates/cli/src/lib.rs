//! Library side of the `qifs-thermo` binary: scenario files, task dispatch
//! and report rendering.

pub mod config;
pub mod format;
mod tasks;

use std::fmt;
use std::str::FromStr;

use qifs_core::QifsError;
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

pub use config::{resolve, Resolved, ScenarioConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_OTHER: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NON_CONVERGENCE: i32 = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn validation(msg: impl Into<String>) -> Self {
        CliError { code: EXIT_VALIDATION, message: msg.into() }
    }

    pub fn other(msg: impl Into<String>) -> Self {
        CliError { code: EXIT_OTHER, message: msg.into() }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<QifsError> for CliError {
    fn from(e: QifsError) -> Self {
        let code = if e.is_validation() {
            EXIT_VALIDATION
        } else if e.is_non_convergence() {
            EXIT_NON_CONVERGENCE
        } else {
            EXIT_OTHER
        };
        CliError { code, message: e.to_string() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    Validate,
    Fixpoint,
    Eigen,
    Entropy,
    Pressure,
    Classic,
    Holevo,
    MarkovCheck,
    Sample,
    Sweep,
}

impl Task {
    pub const ALL: [Task; 10] = [
        Task::Validate,
        Task::Fixpoint,
        Task::Eigen,
        Task::Entropy,
        Task::Pressure,
        Task::Classic,
        Task::Holevo,
        Task::MarkovCheck,
        Task::Sample,
        Task::Sweep,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Task::Validate => "validate",
            Task::Fixpoint => "fixpoint",
            Task::Eigen => "eigen",
            Task::Entropy => "entropy",
            Task::Pressure => "pressure",
            Task::Classic => "classic",
            Task::Holevo => "holevo",
            Task::MarkovCheck => "markov-check",
            Task::Sample => "sample",
            Task::Sweep => "sweep",
        }
    }

    /// Tasks that draw random numbers and therefore refuse to run without a seed.
    pub fn is_randomized(self) -> bool {
        matches!(self, Task::MarkovCheck | Task::Sample | Task::Sweep)
    }
}

impl FromStr for Task {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        Task::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| CliError::validation(format!("unknown task '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Table,
    Json,
    Csv,
}

impl FromStr for OutputFormat {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "table" => Ok(OutputFormat::Table),
            "json" => Ok(OutputFormat::Json),
            "csv" => Ok(OutputFormat::Csv),
            _ => Err(CliError::validation(format!("unknown output format '{s}'"))),
        }
    }
}

/// Command-line values that take precedence over the scenario file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub embed: Option<String>,
    pub p: Option<String>,
    pub q: Option<String>,
    pub a: Option<String>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut ScenarioConfig) -> Result<(), CliError> {
        if let Some(t) = self.tol {
            cfg.solver.tol = Some(t);
        }
        if let Some(m) = self.max_iter {
            cfg.solver.max_iter = Some(m);
        }
        if let Some(s) = self.seed {
            cfg.seed = Some(s);
        }
        if self.embed.is_some() || self.p.is_some() || self.q.is_some() || self.a.is_some() {
            if cfg.families.is_some() && self.embed.is_some() {
                cfg.families = None;
            }
            let e = cfg.embedding.get_or_insert_with(Default::default);
            if let Some(k) = &self.embed {
                e.kind = k.clone();
            }
            if let Some(p) = &self.p {
                e.p = Some(config::parse_flat_square(p, "p")?);
            }
            if let Some(q) = &self.q {
                e.q = Some(config::parse_flat_square(q, "q")?);
            }
            if let Some(a) = &self.a {
                e.a = Some(config::parse_flat_square(a, "a")?);
            }
            // Flag values are documented as column-stochastic, row-major.
            if self.p.is_some() || self.q.is_some() {
                e.convention.get_or_insert_with(|| config::COLUMN_STOCHASTIC.to_string());
            }
            if e.kind.is_empty() {
                return Err(CliError::validation("--p/--q/--a need --embed or an embedding in the config"));
            }
        }
        Ok(())
    }
}

/// Machine-readable result of one task. `results`, `residuals` and
/// `iterations` are ordered maps; sweeps also carry per-sample `rows`.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub task: Task,
    pub inputs_digest: String,
    pub results: Map<String, Value>,
    pub residuals: Map<String, Value>,
    pub iterations: Map<String, Value>,
    pub seed: Option<u64>,
    pub rows: Vec<Map<String, Value>>,
}

impl Report {
    fn new(task: Task, cfg: &ScenarioConfig) -> Self {
        Report {
            task,
            inputs_digest: digest(task, cfg),
            results: Map::new(),
            residuals: Map::new(),
            iterations: Map::new(),
            seed: cfg.seed,
            rows: Vec::new(),
        }
    }

    pub fn to_json(&self) -> Value {
        let mut results = self.results.clone();
        if !self.rows.is_empty() {
            results.insert("rows".into(), Value::Array(self.rows.iter().cloned().map(Value::Object).collect()));
        }
        json!({
            "task": self.task.name(),
            "inputs_digest": self.inputs_digest,
            "results": results,
            "residuals": self.residuals,
            "iterations": self.iterations,
            "seed": self.seed,
        })
    }

    pub fn render(&self, out: OutputFormat) -> String {
        match out {
            OutputFormat::Json => {
                let mut s = serde_json::to_string_pretty(&self.to_json()).expect("serializable");
                s.push('\n');
                s
            }
            OutputFormat::Table => {
                let mut s = format!("task: {}\ninputs_digest: {}\n", self.task.name(), self.inputs_digest);
                if let Some(seed) = self.seed {
                    s.push_str(&format!("seed: {seed}\n"));
                }
                format::table_section(&mut s, "results", &self.results);
                format::table_section(&mut s, "residuals", &self.residuals);
                format::table_section(&mut s, "iterations", &self.iterations);
                if !self.rows.is_empty() {
                    s.push_str("rows:\n");
                    s.push_str(&self.rows_csv());
                }
                s
            }
            OutputFormat::Csv if !self.rows.is_empty() => self.rows_csv(),
            OutputFormat::Csv => {
                let mut s = String::from("section,key,value\n");
                format::csv_pairs(&mut s, "results", &self.results);
                format::csv_pairs(&mut s, "residuals", &self.residuals);
                format::csv_pairs(&mut s, "iterations", &self.iterations);
                s
            }
        }
    }

    fn rows_csv(&self) -> String {
        let header: Vec<&String> = self.rows[0].keys().collect();
        let mut s = header.iter().map(|k| k.as_str()).collect::<Vec<_>>().join(",");
        s.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = header.iter().map(|k| format::csv_cell(&row[k.as_str()])).collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        s
    }
}

/// SHA-256 over the task name and the effective configuration.
pub fn digest(task: Task, cfg: &ScenarioConfig) -> String {
    let mut h = Sha256::new();
    h.update(task.name().as_bytes());
    h.update([0u8]);
    h.update(serde_json::to_vec(cfg).expect("config serializes"));
    hex::encode(h.finalize())
}

/// Runs `task` on `cfg` after applying `overrides`.
pub fn run(task: Task, mut cfg: ScenarioConfig, overrides: &Overrides) -> Result<Report, CliError> {
    overrides.apply(&mut cfg)?;
    if let Some(declared) = cfg.task.as_deref() {
        let declared: Task = declared.parse()?;
        if declared != task && task != Task::Validate {
            return Err(CliError::validation(format!(
                "config declares task '{}' but '{}' was requested",
                declared.name(),
                task.name()
            )));
        }
    }
    if task.is_randomized() && cfg.seed.is_none() {
        return Err(CliError::validation(format!("task '{}' needs an explicit seed", task.name())));
    }
    if let Some(j) = overrides.jobs {
        if j == 0 {
            return Err(CliError::validation("--jobs must be at least 1"));
        }
    }
    let resolved = resolve(&cfg)?;
    let mut report = Report::new(task, &cfg);
    tasks::dispatch(task, &cfg, &resolved, overrides.jobs, &mut report)?;
    if task != Task::Validate {
        check_expected(&cfg, &mut report)?;
    }
    Ok(report)
}

fn check_expected(cfg: &ScenarioConfig, report: &mut Report) -> Result<(), CliError> {
    let Some(expected) = &cfg.expected else {
        return Ok(());
    };
    let tol = cfg.expected_tol.unwrap_or(1e-9);
    let mut worst: f64 = 0.0;
    for (key, want) in expected {
        let got = report
            .results
            .get(key)
            .ok_or_else(|| CliError::validation(format!("expected key '{key}' is not a result of this task")))?;
        let got: Vec<f64> = match got {
            Value::Number(n) => vec![n.as_f64().unwrap_or(f64::NAN)],
            Value::Array(xs) => xs.iter().map(|x| x.as_f64().unwrap_or(f64::NAN)).collect(),
            _ => vec![f64::NAN],
        };
        let want: Vec<f64> = match want {
            config::Expected::Number(x) => vec![*x],
            config::Expected::Array(xs) => xs.clone(),
        };
        if got.len() != want.len() {
            return Err(CliError::other(format!("expected '{key}' has length {}, result has {}", want.len(), got.len())));
        }
        for (g, w) in got.iter().zip(&want) {
            let d = (g - w).abs();
            worst = if d.is_nan() { f64::INFINITY } else { worst.max(d) };
        }
    }
    report.residuals.insert("expected_max_deviation".into(), format::num(worst));
    if worst > tol {
        return Err(CliError::other(format!(
            "results deviate from expected values by {} (tolerance {})",
            format::fmt_g(worst),
            format::fmt_g(tol)
        )));
    }
    Ok(())
}
