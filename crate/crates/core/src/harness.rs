//! Seeded sweeps, CSV persistence and summaries.
//!
//! Trial `t` of a run with base seed `s` always uses `trial_seed(s, t)`.
//! Trials run on a bounded rayon pool and are collected in trial order, so
//! the CSV bytes do not depend on the worker count.

use std::collections::BTreeMap;
use std::fs::File;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use statrs::statistics::{Data, OrderStatistics};

use crate::asymptotics::k_for_alpha;
use crate::combinatorics::choose_f64;
use crate::disorder::{sample_disorder, DistributionSpec};
use crate::error::{LabError, Result};
use crate::lindeberg::{default_beta, gap_trial, SMOOTH_GAP_LIMIT};
use crate::ogp::{run_ogp_experiment, OgpExperimentConfig, DEFAULT_C0};
use crate::rng::{mix64, trial_seed};
use crate::solver::{psi_exact, SolverConfig};

/// Version written in the first CSV column and in every summary.
pub const SCHEMA_VERSION: u32 = 1;
/// Environment variable read by the CLI for the worker count.
pub const WORKERS_ENV: &str = "DKSLAB_WORKERS";
pub const CODE_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Solve,
    Curve,
    Moments,
    Ogp,
    Lindeberg,
    Sweep,
    Formulas,
    BoundsCheck,
}

fn one_or_many<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<usize>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany {
        One(usize),
        Many(Vec<usize>),
    }
    Ok(match OneOrMany::deserialize(d)? {
        OneOrMany::One(n) => vec![n],
        OneOrMany::Many(v) => v,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    /// One size or a grid of sizes.
    #[serde(deserialize_with = "one_or_many")]
    pub n: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    /// Regime exponent: `K = ceil(n^alpha)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default = "default_distribution")]
    pub distribution: String,
    #[serde(default)]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub node_budget: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_csv: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_summary: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c0: Option<f64>,
}

fn default_distribution() -> String {
    "gaussian".into()
}

impl ExperimentConfig {
    pub fn new(experiment: ExperimentKind, n: Vec<usize>) -> Self {
        Self {
            experiment,
            n,
            k: None,
            alpha: None,
            distribution: default_distribution(),
            trials: 0,
            seed: 0,
            node_budget: None,
            threads: None,
            output_csv: None,
            output_summary: None,
            gamma: None,
            beta: None,
            epsilon: None,
            mu: None,
            c0: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        match (self.k, self.alpha) {
            (Some(_), Some(_)) => return Err(LabError::InvalidArgument("give either K or alpha, not both".into())),
            (None, None) => return Err(LabError::InvalidArgument("one of K or alpha is required".into())),
            (None, Some(a)) if !(a > 0.0 && a < 1.0) => {
                return Err(LabError::InvalidArgument(format!("alpha must lie in (0, 1), got {a}")))
            }
            _ => {}
        }
        if self.n.is_empty() {
            return Err(LabError::InvalidArgument("empty n grid".into()));
        }
        if self.threads == Some(0) {
            return Err(LabError::InvalidArgument("threads must be positive".into()));
        }
        DistributionSpec::from_name(&self.distribution)?;
        for &n in &self.n {
            let k = self.k_for(n)?;
            if k < 2 || k > n {
                return Err(LabError::InvalidDimension(format!("K = {k} outside [2, n = {n}]")));
            }
        }
        Ok(())
    }

    pub fn k_for(&self, n: usize) -> Result<usize> {
        match (self.k, self.alpha) {
            (Some(k), None) => Ok(k),
            (None, Some(a)) => Ok(k_for_alpha(n as u64, a) as usize),
            _ => Err(LabError::InvalidArgument("exactly one of K or alpha is required".into())),
        }
    }

    pub fn to_canonical_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    /// Hash of the canonical JSON; output paths and thread count are left
    /// out since they do not change results.
    pub fn hash(&self) -> Result<u64> {
        let stripped = Self { threads: None, output_csv: None, output_summary: None, ..self.clone() };
        let bytes = stripped.to_canonical_json()?.into_bytes();
        Ok(bytes.chunks(8).fold(0x5EED_u64, |h, c| {
            let mut word = [0u8; 8];
            word[..c.len()].copy_from_slice(c);
            mix64(h ^ u64::from_le_bytes(word))
        }))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Bool(bool),
    Text(String),
    Missing,
}

impl Cell {
    fn opt(x: Option<f64>) -> Self {
        x.map_or(Cell::Missing, Cell::Float)
    }

    pub fn render(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Float(x) => format_float(*x),
            Cell::Bool(b) => b.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Missing => String::new(),
        }
    }
}

/// Shortest decimal form of `x` rounded to 12 significant digits.
pub fn format_float(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let rounded: f64 = format!("{x:.11e}").parse().expect("formatted float parses");
    rounded.to_string()
}

/// Rows in memory; the first column is always `schema_version`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        let mut all = vec!["schema_version".to_string()];
        all.extend(columns.iter().map(|c| c.to_string()));
        Self { columns: all, rows: Vec::new() }
    }

    pub fn push(&mut self, cells: Vec<Cell>) {
        debug_assert_eq!(cells.len() + 1, self.columns.len());
        let mut row = vec![Cell::Int(SCHEMA_VERSION as i64)];
        row.extend(cells);
        self.rows.push(row);
    }

    pub fn to_csv_bytes(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render))?;
        }
        w.into_inner().map_err(|e| LabError::Io(e.into_error()))
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv_bytes()?)?;
        Ok(())
    }

    /// Raw string view for [`summarize_rows`].
    pub fn raw(&self) -> RawTable {
        RawTable {
            columns: self.columns.clone(),
            rows: self.rows.iter().map(|r| r.iter().map(Cell::render).collect()).collect(),
        }
    }
}

/// A results file as read back: header plus string cells.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

pub fn read_csv(path: &Path) -> Result<RawTable> {
    let mut r = csv::Reader::from_path(path)?;
    let columns: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    let rows = r
        .records()
        .map(|rec| rec.map(|rec| rec.iter().map(str::to_string).collect()))
        .collect::<std::result::Result<Vec<Vec<String>>, _>>()?;
    if rows.is_empty() && columns.iter().all(|c| c.is_empty()) {
        return Ok(RawTable { columns: Vec::new(), rows });
    }
    if columns.first().map(String::as_str) != Some("schema_version") {
        return Err(LabError::Schema("first column must be schema_version".into()));
    }
    let expected = SCHEMA_VERSION.to_string();
    if let Some(bad) = rows.iter().find(|row| row[0] != expected) {
        return Err(LabError::Schema(format!("unsupported schema version `{}`, expected {expected}", bad[0])));
    }
    Ok(RawTable { columns, rows })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quantiles {
    pub p5: f64,
    pub p25: f64,
    pub p50: f64,
    pub p75: f64,
    pub p95: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ColumnSummary {
    Numeric {
        count: usize,
        /// Empty or non-finite cells.
        missing: usize,
        mean: f64,
        std: f64,
        se: f64,
        min: f64,
        max: f64,
        quantiles: Quantiles,
    },
    Boolean {
        count: usize,
        successes: usize,
        frequency: f64,
        wilson_lower: f64,
        wilson_upper: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub schema_version: u32,
    pub row_count: usize,
    pub columns: BTreeMap<String, ColumnSummary>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WilsonInterval {
    pub lower: f64,
    pub upper: f64,
}

/// Wilson score interval at the given two-sided confidence.
pub fn wilson_interval(successes: usize, trials: usize, confidence: f64) -> WilsonInterval {
    if trials == 0 {
        return WilsonInterval { lower: 0.0, upper: 1.0 };
    }
    let z = Normal::standard().inverse_cdf(0.5 + confidence / 2.0);
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let centre = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
    let half = z / (1.0 + z2 / n) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    WilsonInterval { lower: (centre - half).max(0.0), upper: (centre + half).min(1.0) }
}

const NOT_SUMMARIZED: [&str; 3] = ["schema_version", "seed", "trial"];

fn numeric_summary(mut values: Vec<f64>, missing: usize) -> ColumnSummary {
    let count = values.len();
    let mean = values.iter().sum::<f64>() / count as f64;
    let std = if count > 1 {
        (values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (count - 1) as f64).sqrt()
    } else {
        0.0
    };
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut data = Data::new(values.as_mut_slice());
    let quantiles = Quantiles {
        p5: data.quantile(0.05),
        p25: data.quantile(0.25),
        p50: data.quantile(0.5),
        p75: data.quantile(0.75),
        p95: data.quantile(0.95),
    };
    ColumnSummary::Numeric { count, missing, mean, std, se: std / (count as f64).sqrt(), min, max, quantiles }
}

/// Mean, spread and quantiles of numeric columns; Wilson 95% intervals of
/// boolean columns. Text columns are skipped.
pub fn summarize_rows(table: &RawTable) -> Summary {
    let mut columns = BTreeMap::new();
    for (c, name) in table.columns.iter().enumerate() {
        if NOT_SUMMARIZED.contains(&name.as_str()) || table.rows.is_empty() {
            continue;
        }
        let cells: Vec<&str> = table.rows.iter().map(|r| r[c].as_str()).filter(|s| !s.is_empty()).collect();
        if cells.is_empty() {
            continue;
        }
        if cells.iter().all(|s| *s == "true" || *s == "false") {
            let successes = cells.iter().filter(|s| **s == "true").count();
            let w = wilson_interval(successes, cells.len(), 0.95);
            columns.insert(
                name.clone(),
                ColumnSummary::Boolean {
                    count: cells.len(),
                    successes,
                    frequency: successes as f64 / cells.len() as f64,
                    wilson_lower: w.lower,
                    wilson_upper: w.upper,
                },
            );
            continue;
        }
        let Ok(parsed) = cells.iter().map(|s| s.parse::<f64>()).collect::<std::result::Result<Vec<f64>, _>>() else {
            continue;
        };
        let finite: Vec<f64> = parsed.into_iter().filter(|x| x.is_finite()).collect();
        let missing = table.rows.len() - finite.len();
        if !finite.is_empty() {
            columns.insert(name.clone(), numeric_summary(finite, missing));
        }
    }
    Summary { schema_version: SCHEMA_VERSION, row_count: table.rows.len(), columns }
}

pub fn summarize(path: &Path) -> Result<Summary> {
    Ok(summarize_rows(&read_csv(path)?))
}

/// Per-trial outcome kept alongside the CSV row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub config_hash: u64,
    pub n: usize,
    pub k: usize,
    pub trial: usize,
    pub seed: u64,
    /// `"ok"` or the error message.
    pub status: String,
    pub outputs: Vec<(String, Cell)>,
    pub wall_clock_ms: f64,
    pub code_version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub n: usize,
    pub k: usize,
    pub summary: Summary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub schema_version: u32,
    pub config: ExperimentConfig,
    pub config_hash: u64,
    pub code_version: String,
    pub failed_trials: usize,
    pub wall_clock_seconds: f64,
    pub overall: Summary,
    pub by_n: Vec<GroupSummary>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutput {
    pub table: Table,
    pub records: Vec<RunRecord>,
    pub summary: SweepSummary,
}

/// Runs `f` on a pool of `threads` workers, or on the global pool.
pub fn with_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| LabError::Resource(e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

const SOLVE_COLUMNS: [&str; 10] =
    ["n", "k", "trial", "seed", "status", "psi", "exact", "nodes", "leading_ratio", "excess"];
const LINDEBERG_COLUMNS: [&str; 11] = [
    "n",
    "k",
    "trial",
    "seed",
    "status",
    "psi_gaussian",
    "psi_target",
    "psi_diff",
    "smooth_gaussian",
    "smooth_target",
    "smooth_diff",
];
const OGP_COLUMNS: [&str; 10] = ["n", "k", "trial", "seed", "status", "z", "psi", "gamma", "exact_flag", "gap"];

/// `(Ψ - K^2/4) / (K^{3/2} sqrt(log(n/K)) / 2)`.
pub fn leading_ratio(n: usize, k: usize, psi: f64) -> f64 {
    let kf = k as f64;
    (psi - kf * kf / 4.0) / (kf.powf(1.5) * (n as f64 / kf).ln().sqrt() / 2.0)
}

struct TrialOut {
    rows: Vec<Vec<Cell>>,
    record: RunRecord,
}

fn trial_job(config: &ExperimentConfig, hash: u64, n: usize, k: usize, trial: usize) -> TrialOut {
    let seed = trial_seed(config.seed, trial as u64);
    let start = Instant::now();
    let head = |status: &str| {
        vec![
            Cell::Int(n as i64),
            Cell::Int(k as i64),
            Cell::Int(trial as i64),
            Cell::Text(seed.to_string()),
            Cell::Text(status.into()),
        ]
    };
    let outcome: Result<Vec<(String, Cell)>> = (|| {
        let dist = DistributionSpec::from_name(&config.distribution)?;
        match config.experiment {
            ExperimentKind::Solve | ExperimentKind::Sweep => {
                let m = sample_disorder(n, &dist, seed)?;
                let cfg = SolverConfig { node_budget: config.node_budget, ..SolverConfig::default() };
                let s = psi_exact(&m, k, &cfg)?;
                let kf = k as f64;
                Ok(vec![
                    ("psi".into(), Cell::Float(s.value)),
                    ("exact".into(), Cell::Bool(s.exact)),
                    ("nodes".into(), Cell::Int(s.nodes_explored as i64)),
                    ("leading_ratio".into(), Cell::Float(leading_ratio(n, k, s.value))),
                    ("excess".into(), Cell::Float(s.value - kf * kf / 4.0)),
                ])
            }
            ExperimentKind::Lindeberg => {
                let beta = config.beta.unwrap_or_else(|| default_beta(n as u64, k as u64));
                let smooth = choose_f64(n as u64, k as u64) <= SMOOTH_GAP_LIMIT;
                let g = gap_trial(n, k, beta, &dist, seed, smooth)?;
                let diff = g.smooth_gaussian.zip(g.smooth_target).map(|(a, b)| a - b);
                Ok(vec![
                    ("psi_gaussian".into(), Cell::Float(g.psi_gaussian)),
                    ("psi_target".into(), Cell::Float(g.psi_target)),
                    ("psi_diff".into(), Cell::Float(g.psi_gaussian - g.psi_target)),
                    ("smooth_gaussian".into(), Cell::opt(g.smooth_gaussian)),
                    ("smooth_target".into(), Cell::opt(g.smooth_target)),
                    ("smooth_diff".into(), Cell::opt(diff)),
                ])
            }
            other => Err(LabError::InvalidArgument(format!("{other:?} is not a per-trial experiment"))),
        }
    })();
    let (status, outputs) = match outcome {
        Ok(o) => ("ok".to_string(), o),
        Err(e) => (e.to_string(), Vec::new()),
    };
    let columns: &[&str] =
        if config.experiment == ExperimentKind::Lindeberg { &LINDEBERG_COLUMNS } else { &SOLVE_COLUMNS };
    let mut row = head(&status);
    for name in &columns[5..] {
        row.push(outputs.iter().find(|(c, _)| c == name).map_or(Cell::Missing, |(_, v)| v.clone()));
    }
    TrialOut {
        rows: vec![row],
        record: RunRecord {
            config_hash: hash,
            n,
            k,
            trial,
            seed,
            status,
            outputs,
            wall_clock_ms: start.elapsed().as_secs_f64() * 1e3,
            code_version: CODE_VERSION.into(),
        },
    }
}

fn ogp_job(config: &ExperimentConfig, hash: u64, n: usize, k: usize) -> Result<Vec<TrialOut>> {
    let start = Instant::now();
    let oc = OgpExperimentConfig {
        n,
        k,
        distribution: config.distribution.clone(),
        mu: config.mu.unwrap_or(1.0),
        trials: config.trials,
        seed: config.seed,
        node_budget: config.node_budget,
        c0: config.c0.unwrap_or(DEFAULT_C0),
        epsilon: config.epsilon.unwrap_or(0.1),
    };
    let result = run_ogp_experiment(&oc)?;
    let per_trial = start.elapsed().as_secs_f64() * 1e3 / config.trials.max(1) as f64;
    Ok(result
        .instances
        .iter()
        .map(|inst| {
            let head = vec![
                Cell::Int(n as i64),
                Cell::Int(k as i64),
                Cell::Int(inst.trial as i64),
                Cell::Text(inst.seed.to_string()),
                Cell::Text(inst.status.clone()),
            ];
            let rows: Vec<Vec<Cell>> = result
                .rows
                .iter()
                .filter(|r| r.trial == inst.trial)
                .map(|r| {
                    let mut row = head.clone();
                    row.extend([
                        Cell::Int(r.z as i64),
                        Cell::opt(r.psi),
                        Cell::opt(r.gamma),
                        Cell::Bool(r.exact),
                        Cell::opt(inst.gap),
                    ]);
                    row
                })
                .collect();
            let rows = if rows.is_empty() {
                let mut row = head.clone();
                row.extend(std::iter::repeat_n(Cell::Missing, 5));
                vec![row]
            } else {
                rows
            };
            let verdict = inst.witness.as_ref().map(|w| format!("{:?}", w.holds()));
            TrialOut {
                rows,
                record: RunRecord {
                    config_hash: hash,
                    n,
                    k,
                    trial: inst.trial,
                    seed: inst.seed,
                    status: inst.status.clone(),
                    outputs: vec![
                        ("gap".into(), Cell::opt(inst.gap)),
                        ("witness".into(), verdict.map_or(Cell::Missing, Cell::Text)),
                    ],
                    wall_clock_ms: per_trial,
                    code_version: CODE_VERSION.into(),
                },
            }
        })
        .collect())
}

fn create_output(path: &Option<PathBuf>) -> Result<Option<File>> {
    path.as_ref().map(File::create).transpose().map_err(LabError::from)
}

/// One CSV row per trial (per `(trial, z)` for `ogp`) and a JSON summary.
///
/// Output files are opened before any compute so an unwritable path fails
/// fast. A failing trial is recorded with its error in `status`.
pub fn run_sweep(config: &ExperimentConfig) -> Result<SweepOutput> {
    config.validate()?;
    let csv_file = create_output(&config.output_csv)?;
    let summary_file = create_output(&config.output_summary)?;
    let hash = config.hash()?;
    let start = Instant::now();
    let columns: &[&str] = match config.experiment {
        ExperimentKind::Solve | ExperimentKind::Sweep => &SOLVE_COLUMNS,
        ExperimentKind::Lindeberg => &LINDEBERG_COLUMNS,
        ExperimentKind::Ogp => &OGP_COLUMNS,
        other => return Err(LabError::InvalidArgument(format!("{other:?} does not run as a sweep"))),
    };
    let grid: Vec<(usize, usize)> = config.n.iter().map(|&n| Ok((n, config.k_for(n)?))).collect::<Result<_>>()?;
    let outs: Vec<TrialOut> = with_pool(config.threads, || -> Result<Vec<TrialOut>> {
        if config.experiment == ExperimentKind::Ogp {
            let nested: Vec<Vec<TrialOut>> =
                grid.iter().map(|&(n, k)| ogp_job(config, hash, n, k)).collect::<Result<_>>()?;
            return Ok(nested.into_iter().flatten().collect());
        }
        let jobs: Vec<(usize, usize, usize)> =
            grid.iter().flat_map(|&(n, k)| (0..config.trials).map(move |t| (n, k, t))).collect();
        Ok(jobs.par_iter().map(|&(n, k, t)| trial_job(config, hash, n, k, t)).collect())
    })??;

    let mut table = Table::new(columns);
    let mut records = Vec::with_capacity(outs.len());
    for out in outs {
        out.rows.into_iter().for_each(|r| table.push(r));
        records.push(out.record);
    }
    let raw = table.raw();
    let by_n = grid
        .iter()
        .map(|&(n, k)| {
            let key = n.to_string();
            let rows = raw.rows.iter().filter(|r| r[1] == key).cloned().collect();
            GroupSummary { n, k, summary: summarize_rows(&RawTable { columns: raw.columns.clone(), rows }) }
        })
        .collect();
    let summary = SweepSummary {
        schema_version: SCHEMA_VERSION,
        config: config.clone(),
        config_hash: hash,
        code_version: CODE_VERSION.into(),
        failed_trials: records.iter().filter(|r| r.status != "ok").count(),
        wall_clock_seconds: start.elapsed().as_secs_f64(),
        overall: summarize_rows(&raw),
        by_n,
    };
    if let Some(mut f) = csv_file {
        use std::io::Write;
        f.write_all(&table.to_csv_bytes()?)?;
    }
    if let Some(f) = summary_file {
        serde_json::to_writer_pretty(f, &summary)?;
    }
    Ok(SweepOutput { table, records, summary })
}
