//! Configured sweeps over the model's phase diagram.
//!
//! Each command expands its configuration into independent cells, runs them
//! on a worker pool, and writes CSV in cell order. Cell seeds come from
//! `mix_seed(&[master, theta_idx, alpha_idx, circuit_idx])`, with restarts
//! extending that seed by their index, so output bytes depend only on the
//! configuration and master seed. Long commands checkpoint finished cells to
//! `<out>.ckpt` so an interrupted run can resume.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::ansatz::CircuitSpec;
use crate::exact::{entropy_sweep, DEFAULT_ED_CEILING};
use crate::format::csv_num;
use crate::lbfgs::OptimizerOptions;
use crate::pauli::ModelParams;
use crate::seed::mix_seed;
use crate::squeezing::{ground_state_squeezing, variational_squeezing, Quench, SqueezingReport};
use crate::state::EntropyBase;
use crate::vqe::{TrainingMode, VqeProblem, VqeResult};
use crate::{Error, Result};

pub const ENV_OUT: &str = "LRVQE_OUT";
pub const ENV_WORKERS: &str = "LRVQE_WORKERS";

/// An explicit list of values or `points` evenly spaced values from `start`
/// to `stop` inclusive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    Values(Vec<f64>),
    Range { start: f64, stop: f64, points: usize },
}

impl Grid {
    pub fn values(&self) -> Vec<f64> {
        match self {
            Grid::Values(v) => v.clone(),
            Grid::Range { start, stop, points } => match points {
                0 => Vec::new(),
                1 => vec![*start],
                &p => (0..p).map(|i| start + (stop - start) * i as f64 / (p - 1) as f64).collect(),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub n_qubits: usize,
    pub gammas: Vec<f64>,
    /// Field angle in units of pi.
    pub theta_pi: Grid,
    pub alpha: Grid,
}

impl Default for ModelSection {
    fn default() -> Self {
        Self {
            n_qubits: 10,
            gammas: vec![1.0],
            theta_pi: Grid::Range { start: 0.0, stop: 0.5, points: 21 },
            alpha: Grid::Range { start: 0.0, stop: 3.0, points: 13 },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VqeSection {
    pub circuits: Vec<String>,
    pub restarts: usize,
    pub mode: TrainingMode,
    pub optimizer: OptimizerOptions,
}

impl Default for VqeSection {
    fn default() -> Self {
        Self { circuits: vec!["332211".into()], restarts: 50, mode: TrainingMode::LayerRecursive, optimizer: OptimizerOptions::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EdSection {
    pub entropy_base: EntropyBase,
}

impl Default for EdSection {
    fn default() -> Self {
        Self { entropy_base: EntropyBase::Natural }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SqueezeSection {
    pub gamma: f64,
    pub t_max: f64,
    pub n_steps: usize,
    pub circuits: Vec<String>,
    pub repetitions: usize,
}

impl Default for SqueezeSection {
    fn default() -> Self {
        Self {
            gamma: 1.0,
            t_max: 10.0,
            n_steps: 1000,
            circuits: vec!["111111".into(), "222111".into(), "332211".into()],
            repetitions: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScalingSection {
    pub n_qubits: Vec<usize>,
    pub k_values: Vec<usize>,
    pub gamma: f64,
    pub alpha: f64,
    pub theta_pi: f64,
    pub max_layers: usize,
    pub restarts: usize,
    pub target_fidelity: f64,
}

impl Default for ScalingSection {
    fn default() -> Self {
        Self {
            n_qubits: vec![6, 8, 10, 12],
            k_values: vec![1, 2, 3],
            gamma: 1.0,
            alpha: 0.5,
            theta_pi: 0.425,
            max_layers: 12,
            restarts: 5,
            target_fidelity: 0.95,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub seed: u64,
    /// Zero uses every available core.
    pub workers: usize,
    pub out: Option<PathBuf>,
    pub model: ModelSection,
    pub vqe: VqeSection,
    pub ed: EdSection,
    pub squeeze: SqueezeSection,
    pub scaling: ScalingSection,
}

fn config_error(field: &str, reason: impl Into<String>) -> Error {
    Error::Config { field: field.into(), reason: reason.into() }
}

impl SweepConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let span = e.span().map(|s| line_of(text, s.start)).map(|l| format!("line {l}")).unwrap_or_else(|| "config".into());
            config_error(&span, e.message().to_string())
        })
    }

    /// Reads, applies environment overrides and validates.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| config_error(&path.display().to_string(), e.to_string()))?;
        let mut cfg = Self::from_toml(&text)?;
        cfg.apply_env(|k| std::env::var(k).ok())?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn apply_env(&mut self, lookup: impl Fn(&str) -> Option<String>) -> Result<()> {
        if let Some(out) = lookup(ENV_OUT) {
            self.out = Some(out.into());
        }
        if let Some(w) = lookup(ENV_WORKERS) {
            self.workers = w.trim().parse().map_err(|_| config_error(ENV_WORKERS, format!("not a worker count: {w:?}")))?;
        }
        Ok(())
    }

    pub fn thetas(&self) -> Vec<f64> {
        self.model.theta_pi.values().into_iter().map(|t| t * PI).collect()
    }

    pub fn alphas(&self) -> Vec<f64> {
        self.model.alpha.values()
    }

    pub fn validate(&self) -> Result<()> {
        let m = &self.model;
        if m.n_qubits < 2 || m.n_qubits > DEFAULT_ED_CEILING {
            return Err(config_error("model.n_qubits", format!("{} outside 2..={DEFAULT_ED_CEILING}", m.n_qubits)));
        }
        if m.gammas.is_empty() {
            return Err(config_error("model.gammas", "empty"));
        }
        if let Some(g) = m.gammas.iter().find(|g| !(0.0..=1.0).contains(*g)) {
            return Err(config_error("model.gammas", format!("{g} outside [0, 1]")));
        }
        validate_grid("model.theta_pi", &m.theta_pi, 0.0, 0.5)?;
        validate_grid("model.alpha", &m.alpha, 0.0, f64::INFINITY)?;

        let v = &self.vqe;
        if v.circuits.is_empty() {
            return Err(config_error("vqe.circuits", "empty"));
        }
        for c in &v.circuits {
            CircuitSpec::parse(c, m.n_qubits, 1.0).map_err(|e| config_error("vqe.circuits", e.to_string()))?;
        }
        if v.restarts == 0 {
            return Err(config_error("vqe.restarts", "must be at least 1"));
        }
        v.optimizer.validate().map_err(|e| match e {
            Error::Config { field, reason } => config_error(&format!("vqe.optimizer.{field}"), reason),
            e => e,
        })?;
        if v.optimizer.seed != 0 {
            return Err(config_error("vqe.optimizer.seed", "seeds derive from the top-level `seed`"));
        }

        let s = &self.squeeze;
        if !(0.0..=1.0).contains(&s.gamma) {
            return Err(config_error("squeeze.gamma", format!("{} outside [0, 1]", s.gamma)));
        }
        if !(s.t_max > 0.0 && s.t_max.is_finite()) {
            return Err(config_error("squeeze.t_max", "must be positive"));
        }
        if s.n_steps < 2 {
            return Err(config_error("squeeze.n_steps", "must be at least 2"));
        }
        if s.repetitions == 0 {
            return Err(config_error("squeeze.repetitions", "must be at least 1"));
        }
        for c in &s.circuits {
            CircuitSpec::parse(c, m.n_qubits, s.gamma).map_err(|e| config_error("squeeze.circuits", e.to_string()))?;
        }

        let sc = &self.scaling;
        if sc.n_qubits.is_empty() {
            return Err(config_error("scaling.n_qubits", "empty"));
        }
        if let Some(n) = sc.n_qubits.iter().find(|&&n| !(2..=DEFAULT_ED_CEILING).contains(&n)) {
            return Err(config_error("scaling.n_qubits", format!("{n} outside 2..={DEFAULT_ED_CEILING}")));
        }
        if sc.k_values.is_empty() || sc.k_values.contains(&0) {
            return Err(config_error("scaling.k_values", "need positive distances"));
        }
        if !(0.0..=1.0).contains(&sc.gamma) {
            return Err(config_error("scaling.gamma", format!("{} outside [0, 1]", sc.gamma)));
        }
        if !(sc.alpha >= 0.0 && sc.alpha.is_finite()) {
            return Err(config_error("scaling.alpha", "must be finite and >= 0"));
        }
        if !(0.0..=0.5).contains(&sc.theta_pi) {
            return Err(config_error("scaling.theta_pi", format!("{} outside [0, 0.5]", sc.theta_pi)));
        }
        if sc.max_layers == 0 {
            return Err(config_error("scaling.max_layers", "must be at least 1"));
        }
        if sc.restarts == 0 {
            return Err(config_error("scaling.restarts", "must be at least 1"));
        }
        if !(sc.target_fidelity > 0.0 && sc.target_fidelity <= 1.0) {
            return Err(config_error("scaling.target_fidelity", "must lie in (0, 1]"));
        }
        Ok(())
    }
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

fn validate_grid(field: &str, grid: &Grid, lo: f64, hi: f64) -> Result<()> {
    let values = grid.values();
    if values.is_empty() {
        return Err(config_error(field, "empty grid"));
    }
    if let Some(v) = values.iter().find(|v| !(v.is_finite() && (lo..=hi).contains(*v))) {
        return Err(config_error(field, format!("{v} outside [{lo}, {hi}]")));
    }
    Ok(())
}

/// Run-time settings not part of the configuration.
#[derive(Debug, Clone)]
pub struct RunContext {
    pub out: PathBuf,
    pub workers: usize,
    pub resume: bool,
}

impl RunContext {
    /// `cfg.out` when set, else `default_name`.
    pub fn new(cfg: &SweepConfig, default_name: &str, resume: bool) -> Self {
        Self { out: cfg.out.clone().unwrap_or_else(|| default_name.into()), workers: cfg.workers, resume }
    }

    pub fn sibling(&self, suffix: &str) -> PathBuf {
        let stem = self.out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        let ext = self.out.extension().map(|e| format!(".{}", e.to_string_lossy())).unwrap_or_default();
        self.out.with_file_name(format!("{stem}_{suffix}{ext}"))
    }

    pub fn checkpoint(&self) -> PathBuf {
        let mut name = self.out.clone().into_os_string();
        name.push(".ckpt");
        name.into()
    }

    fn pool(&self) -> Result<rayon::ThreadPool> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers)
            .build()
            .map_err(|e| config_error("workers", e.to_string()))
    }
}

/// What a command wrote and how many cells failed.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CommandOutcome {
    pub files: Vec<PathBuf>,
    pub failed_cells: usize,
    /// Human-readable lines for the terminal.
    pub summary: Vec<String>,
}

/// Writes through a temporary file and renames it into place.
fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct CheckpointHeader {
    command: String,
    config: serde_json::Value,
}

#[derive(Serialize, Deserialize)]
struct CheckpointEntry<T> {
    index: usize,
    record: T,
}

/// Evaluates `cell(i)` for `i < n_cells` in batches on the context's pool,
/// rewriting the checkpoint after each batch. With `ctx.resume`, cells found
/// in a checkpoint written by the same command and configuration are reused.
fn run_cells<T, F>(ctx: &RunContext, command: &str, cfg: &SweepConfig, n_cells: usize, cell: F) -> Result<Vec<T>>
where
    T: Serialize + DeserializeOwned + Send,
    F: Fn(usize) -> T + Sync,
{
    let header = CheckpointHeader { command: command.into(), config: fingerprint(cfg)? };
    let path = ctx.checkpoint();
    let mut done: BTreeMap<usize, T> = BTreeMap::new();
    if ctx.resume && path.exists() {
        done = read_checkpoint(&path, &header)?;
        log::info!("resuming {command}: {} of {n_cells} cells already done", done.len());
    }
    let pool = ctx.pool()?;
    let pending: Vec<usize> = (0..n_cells).filter(|i| !done.contains_key(i)).collect();
    let batch = pool.current_num_threads().max(1);
    write_checkpoint(&path, &header, &done)?;
    for chunk in pending.chunks(batch) {
        let results: Vec<T> = pool.install(|| chunk.par_iter().map(|&i| cell(i)).collect());
        done.extend(chunk.iter().copied().zip(results));
        write_checkpoint(&path, &header, &done)?;
    }
    Ok(done.into_values().collect())
}

/// The configuration minus settings that cannot change results.
fn fingerprint(cfg: &SweepConfig) -> Result<serde_json::Value> {
    let mut v = serde_json::to_value(cfg)?;
    if let Some(map) = v.as_object_mut() {
        map.remove("workers");
        map.remove("out");
    }
    Ok(v)
}

fn write_checkpoint<T: Serialize>(path: &Path, header: &CheckpointHeader, done: &BTreeMap<usize, T>) -> Result<()> {
    let mut text = serde_json::to_string(header)?;
    text.push('\n');
    for (&index, record) in done {
        text.push_str(&serde_json::to_string(&CheckpointEntry { index, record })?);
        text.push('\n');
    }
    write_atomic(path, &text)
}

fn read_checkpoint<T: DeserializeOwned>(path: &Path, expected: &CheckpointHeader) -> Result<BTreeMap<usize, T>> {
    let mut lines = BufReader::new(fs::File::open(path)?).lines();
    let header: CheckpointHeader = match lines.next() {
        Some(line) => serde_json::from_str(&line?)?,
        None => return Ok(BTreeMap::new()),
    };
    if header.command != expected.command || header.config != expected.config {
        return Err(config_error(
            &path.display().to_string(),
            "checkpoint was written by a different command or configuration",
        ));
    }
    let mut done = BTreeMap::new();
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let entry: CheckpointEntry<T> = serde_json::from_str(&line)?;
        done.insert(entry.index, entry.record);
    }
    Ok(done)
}

fn opt_num(v: Option<f64>) -> String {
    v.map(csv_num).unwrap_or_default()
}

/// CSV-safe rendering of an error message.
fn csv_text(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\"").replace('\n', " "))
    } else {
        s.to_string()
    }
}

/// Half-chain entropy over the configured grid for every gamma.
///
/// Writes `gamma,theta,alpha,entropy,is_ridge` rows (alpha-major) and a
/// `_ridge` file with the entropy maximum at each alpha.
pub fn cmd_ed_sweep(cfg: &SweepConfig, ctx: &RunContext) -> Result<CommandOutcome> {
    let pool = ctx.pool()?;
    let (thetas, alphas) = (cfg.thetas(), cfg.alphas());
    let tables = pool.install(|| {
        cfg.model
            .gammas
            .iter()
            .map(|&g| entropy_sweep(cfg.model.n_qubits, g, &thetas, &alphas, cfg.ed.entropy_base))
            .collect::<Result<Vec<_>>>()
    })?;
    let mut main = String::from("gamma,theta,alpha,entropy,is_ridge\n");
    let mut ridge = String::from("gamma,alpha,theta,entropy\n");
    let mut summary = Vec::new();
    for t in &tables {
        for p in &t.points {
            main.push_str(&format!(
                "{},{},{},{},{}\n",
                csv_num(t.gamma),
                csv_num(p.theta),
                csv_num(p.alpha),
                csv_num(p.entropy),
                u8::from(p.is_ridge)
            ));
        }
        for p in t.ridge() {
            ridge.push_str(&format!("{},{},{},{}\n", csv_num(t.gamma), csv_num(p.alpha), csv_num(p.theta), csv_num(p.entropy)));
            summary.push(format!("gamma={} alpha={}: ridge at theta={:.4} pi", t.gamma, p.alpha, p.theta / PI));
        }
    }
    let ridge_path = ctx.sibling("ridge");
    write_atomic(&ctx.out, &main)?;
    write_atomic(&ridge_path, &ridge)?;
    Ok(CommandOutcome { files: vec![ctx.out.clone(), ridge_path], failed_cells: 0, summary })
}

fn single_point(cfg: &SweepConfig) -> Result<ModelParams> {
    let (thetas, alphas) = (cfg.thetas(), cfg.alphas());
    if thetas.len() != 1 || alphas.len() != 1 || cfg.model.gammas.len() != 1 {
        return Err(config_error("model", "vqe-run needs exactly one theta, one alpha and one gamma"));
    }
    ModelParams::new(cfg.model.n_qubits, cfg.model.gammas[0], alphas[0], thetas[0])
}

/// Every restart of every configured circuit at a single model point, as a
/// JSON array of results with cost traces.
pub fn cmd_vqe_run(cfg: &SweepConfig, ctx: &RunContext) -> Result<CommandOutcome> {
    let model = single_point(cfg)?;
    let pool = ctx.pool()?;
    let mut results: Vec<VqeResult> = Vec::new();
    let mut summary = Vec::new();
    for (ci, text) in cfg.vqe.circuits.iter().enumerate() {
        let spec = CircuitSpec::parse(text, model.n_qubits, model.gamma)?;
        let problem = VqeProblem::new(&spec, &model)?.with_mode(cfg.vqe.mode);
        let opts = OptimizerOptions { seed: mix_seed(&[cfg.seed, 0, 0, ci as u64]), ..cfg.vqe.optimizer.clone() };
        let s = pool.install(|| problem.run_restarts(cfg.vqe.restarts, &opts))?;
        summary.push(format!(
            "{text}: best F={:.6} mean F={:.6} mean iterations={:.1} CR={:.0} R_Q={}",
            s.best_fidelity,
            s.mean_fidelity,
            s.mean_iterations,
            s.cr,
            spec.count_two_qubit_gates()
        ));
        results.extend(s.runs);
    }
    let mut text = serde_json::to_string_pretty(&results)?;
    text.push('\n');
    write_atomic(&ctx.out, &text)?;
    Ok(CommandOutcome { files: vec![ctx.out.clone()], failed_cells: 0, summary })
}

/// One grid point of a VQE sweep, aggregated over restarts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub gamma: f64,
    pub circuit: String,
    pub theta: f64,
    pub alpha: f64,
    pub best_fidelity: Option<f64>,
    pub mean_fidelity: Option<f64>,
    pub lowest_cost_fidelity: Option<f64>,
    pub mean_iterations: Option<f64>,
    pub cr: Option<f64>,
    pub rq: usize,
    pub n_parameters: usize,
    pub success_fraction: Option<f64>,
    pub seed: u64,
    pub error: Option<String>,
}

impl SweepRecord {
    pub const CSV_HEADER: &'static str = "gamma,circuit,theta,alpha,best_fidelity,mean_fidelity,lowest_cost_fidelity,mean_iterations,cr,rq,n_parameters,success_fraction,seed,error";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            csv_num(self.gamma),
            self.circuit,
            csv_num(self.theta),
            csv_num(self.alpha),
            opt_num(self.best_fidelity),
            opt_num(self.mean_fidelity),
            opt_num(self.lowest_cost_fidelity),
            opt_num(self.mean_iterations),
            opt_num(self.cr),
            self.rq,
            self.n_parameters,
            opt_num(self.success_fraction),
            self.seed,
            self.error.as_deref().map(csv_text).unwrap_or_default()
        )
    }
}

/// Per-circuit rollup over the grid: worst and mean best-of-restarts
/// fidelity and the largest classical resource.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircuitSummary {
    pub gamma: f64,
    pub circuit: String,
    pub f_min: f64,
    pub f_avg: f64,
    pub cr_max: f64,
    pub rq: usize,
    pub points: usize,
    pub failed: usize,
}

pub fn summarize(records: &[SweepRecord]) -> Vec<CircuitSummary> {
    let mut out: Vec<CircuitSummary> = Vec::new();
    for r in records {
        let pos = out.iter().position(|s| s.circuit == r.circuit && s.gamma == r.gamma);
        let s = match pos {
            Some(i) => &mut out[i],
            None => {
                out.push(CircuitSummary {
                    gamma: r.gamma,
                    circuit: r.circuit.clone(),
                    f_min: f64::INFINITY,
                    f_avg: 0.0,
                    cr_max: 0.0,
                    rq: r.rq,
                    points: 0,
                    failed: 0,
                });
                out.last_mut().expect("just pushed")
            }
        };
        match (r.best_fidelity, r.cr) {
            (Some(f), Some(cr)) if r.error.is_none() => {
                s.f_min = s.f_min.min(f);
                s.f_avg += f;
                s.cr_max = s.cr_max.max(cr);
                s.points += 1;
            }
            _ => s.failed += 1,
        }
    }
    for s in &mut out {
        s.f_avg = if s.points > 0 { s.f_avg / s.points as f64 } else { f64::NAN };
        if s.points == 0 {
            s.f_min = f64::NAN;
        }
    }
    out
}

/// `run_restarts` at every `(gamma, circuit, alpha, theta)` cell.
///
/// The circuit index in the seed runs over `(gamma, circuit)` pairs so
/// every cell gets its own stream. Failed cells keep their row with the
/// error text and the sweep carries on.
pub fn cmd_vqe_sweep(cfg: &SweepConfig, ctx: &RunContext) -> Result<CommandOutcome> {
    let (thetas, alphas) = (cfg.thetas(), cfg.alphas());
    let n = cfg.model.n_qubits;
    let pairs: Vec<(f64, &String)> = cfg.model.gammas.iter().flat_map(|&g| cfg.vqe.circuits.iter().map(move |c| (g, c))).collect();
    let per_pair = thetas.len() * alphas.len();
    let cell = |i: usize| -> SweepRecord {
        let (ci, rest) = (i / per_pair, i % per_pair);
        let (ai, ti) = (rest / thetas.len(), rest % thetas.len());
        let (gamma, text) = pairs[ci];
        let seed = mix_seed(&[cfg.seed, ti as u64, ai as u64, ci as u64]);
        let mut record = SweepRecord {
            gamma,
            circuit: text.clone(),
            theta: thetas[ti],
            alpha: alphas[ai],
            best_fidelity: None,
            mean_fidelity: None,
            lowest_cost_fidelity: None,
            mean_iterations: None,
            cr: None,
            rq: 0,
            n_parameters: 0,
            success_fraction: None,
            seed,
            error: None,
        };
        let run = || -> Result<_> {
            let spec = CircuitSpec::parse(text, n, gamma)?;
            let model = ModelParams::new(n, gamma, alphas[ai], thetas[ti])?;
            let problem = VqeProblem::new(&spec, &model)?.with_mode(cfg.vqe.mode);
            let opts = OptimizerOptions { seed, ..cfg.vqe.optimizer.clone() };
            Ok((spec.count_two_qubit_gates(), spec.count_parameters(), problem.run_restarts(cfg.vqe.restarts, &opts)?))
        };
        match run() {
            Ok((rq, l, s)) => {
                record.rq = rq;
                record.n_parameters = l;
                record.best_fidelity = Some(s.best_fidelity);
                record.mean_fidelity = Some(s.mean_fidelity);
                record.lowest_cost_fidelity = Some(s.lowest_cost_fidelity);
                record.mean_iterations = Some(s.mean_iterations);
                record.cr = Some(s.cr);
                record.success_fraction = Some(s.success_fraction);
            }
            Err(e) => {
                log::warn!("cell {i} ({text}, theta={}, alpha={}) failed: {e}", thetas[ti], alphas[ai]);
                record.error = Some(e.to_string());
            }
        }
        record
    };
    let records = run_cells(ctx, "vqe-sweep", cfg, pairs.len() * per_pair, cell)?;

    let mut main = format!("{}\n", SweepRecord::CSV_HEADER);
    for r in &records {
        main.push_str(&r.csv_row());
        main.push('\n');
    }
    let summaries = summarize(&records);
    let mut table = String::from("gamma,circuit,f_min,f_avg,cr_max,rq,points,failed\n");
    let mut summary = Vec::new();
    for s in &summaries {
        table.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            csv_num(s.gamma),
            s.circuit,
            csv_num(s.f_min),
            csv_num(s.f_avg),
            csv_num(s.cr_max),
            s.rq,
            s.points,
            s.failed
        ));
        summary.push(format!(
            "gamma={} {}: F_min={:.4} F_avg={:.4} CR_max={:.0} R_Q={}",
            s.gamma, s.circuit, s.f_min, s.f_avg, s.cr_max, s.rq
        ));
    }
    let summary_path = ctx.sibling("summary");
    write_atomic(&ctx.out, &main)?;
    write_atomic(&summary_path, &table)?;
    let failed_cells = records.iter().filter(|r| r.error.is_some()).count();
    Ok(CommandOutcome { files: vec![ctx.out.clone(), summary_path], failed_cells, summary })
}

/// Smallest descending-grouped depth reaching the target fidelity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingRecord {
    pub n_qubits: usize,
    pub k: usize,
    /// `None` when the cap was reached first.
    pub layers: Option<usize>,
    /// Best-of-restarts fidelity at `layers`, or at the cap.
    pub best_fidelity: Option<f64>,
    pub circuit: String,
    pub error: Option<String>,
}

/// For each `(N, k)`, grows `M` from `k` until the best of the configured
/// restarts reaches the target fidelity. Seeds are
/// `mix_seed(&[master, n_idx, k_idx, M])`.
pub fn cmd_scaling(cfg: &SweepConfig, ctx: &RunContext) -> Result<CommandOutcome> {
    let sc = &cfg.scaling;
    let cells: Vec<(usize, usize)> = (0..sc.n_qubits.len()).flat_map(|ni| (0..sc.k_values.len()).map(move |ki| (ni, ki))).collect();
    let cell = |i: usize| -> ScalingRecord {
        let (ni, ki) = cells[i];
        let (n, k) = (sc.n_qubits[ni], sc.k_values[ki]);
        let mut record = ScalingRecord { n_qubits: n, k, layers: None, best_fidelity: None, circuit: String::new(), error: None };
        if k >= n {
            record.error = Some(format!("distance {k} needs more than {n} qubits"));
            return record;
        }
        let search = |record: &mut ScalingRecord| -> Result<()> {
            let model = ModelParams::new(n, sc.gamma, sc.alpha, sc.theta_pi * PI)?;
            for m in k..=sc.max_layers {
                let spec = CircuitSpec::descending(n, sc.gamma, k, m)?;
                let problem = VqeProblem::new(&spec, &model)?.with_mode(cfg.vqe.mode);
                let opts = OptimizerOptions { seed: mix_seed(&[cfg.seed, ni as u64, ki as u64, m as u64]), ..cfg.vqe.optimizer.clone() };
                let s = problem.run_restarts(sc.restarts, &opts)?;
                record.best_fidelity = Some(s.best_fidelity);
                record.circuit = spec.notation();
                log::debug!("scaling N={n} k={k} M={m}: best F={:.6}", s.best_fidelity);
                if s.best_fidelity >= sc.target_fidelity {
                    record.layers = Some(m);
                    return Ok(());
                }
            }
            Ok(())
        };
        if let Err(e) = search(&mut record) {
            record.error = Some(e.to_string());
        }
        record
    };
    let records = run_cells(ctx, "scaling", cfg, cells.len(), cell)?;
    let mut main = String::from("n_qubits,k,layers,achieved,best_fidelity,circuit,error\n");
    let mut summary = Vec::new();
    for r in &records {
        main.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.n_qubits,
            r.k,
            r.layers.map(|m| m.to_string()).unwrap_or_default(),
            u8::from(r.layers.is_some()),
            opt_num(r.best_fidelity),
            r.circuit,
            r.error.as_deref().map(csv_text).unwrap_or_default()
        ));
        summary.push(match (r.layers, &r.error) {
            (_, Some(e)) => format!("N={} k={}: failed: {e}", r.n_qubits, r.k),
            (Some(m), None) => format!("N={} k={}: M={m} ({})", r.n_qubits, r.k, r.circuit),
            (None, None) => format!("N={} k={}: not achieved at cap M={}", r.n_qubits, r.k, sc.max_layers),
        });
    }
    write_atomic(&ctx.out, &main)?;
    let failed_cells = records.iter().filter(|r| r.error.is_some()).count();
    Ok(CommandOutcome { files: vec![ctx.out.clone()], failed_cells, summary })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SqueezeProtocol {
    Ground,
    Quench,
    Vqa,
}

impl std::str::FromStr for SqueezeProtocol {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ground" => Ok(Self::Ground),
            "quench" => Ok(Self::Quench),
            "vqa" => Ok(Self::Vqa),
            _ => Err(config_error("protocol", format!("expected ground, quench or vqa, got {s:?}"))),
        }
    }
}

/// A squeezing cell: a report, or the error that prevented one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct SqueezeCell {
    theta: f64,
    alpha: f64,
    report: Option<SqueezingReport>,
    error: Option<String>,
}

/// Variational squeezing of one circuit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct VqaCell {
    circuit: String,
    mean_r: Option<f64>,
    std_r: Option<f64>,
    reports: Vec<SqueezingReport>,
    degenerate_restarts: usize,
    error: Option<String>,
}

/// Ground-state or quench squeezing over the model grid, or variational
/// squeezing for each configured circuit.
///
/// Grid protocols write one report row per `(alpha, theta)`; rows whose
/// squeezing is undefined keep `theta, alpha` and leave the rest empty. The
/// variational protocol writes one row per repetition and a `_summary` file
/// with mean and sample standard deviation of `r`.
pub fn cmd_squeeze(cfg: &SweepConfig, ctx: &RunContext, protocol: SqueezeProtocol) -> Result<CommandOutcome> {
    let n = cfg.model.n_qubits;
    let sq = &cfg.squeeze;
    let command = format!("squeeze-{}", serde_json::to_value(protocol)?.as_str().unwrap_or_default());
    if protocol == SqueezeProtocol::Vqa {
        let cell = |ci: usize| -> VqaCell {
            let text = &sq.circuits[ci];
            let run = || -> Result<_> {
                let spec = CircuitSpec::parse(text, n, sq.gamma)?;
                let opts = OptimizerOptions { seed: mix_seed(&[cfg.seed, 0, 0, ci as u64]), ..cfg.vqe.optimizer.clone() };
                variational_squeezing(&spec, sq.repetitions, &opts, cfg.vqe.mode)
            };
            match run() {
                Ok(v) => VqaCell {
                    circuit: text.clone(),
                    mean_r: Some(v.mean_r),
                    std_r: Some(v.std_r),
                    reports: v.runs.into_iter().map(|r| r.report).collect(),
                    degenerate_restarts: v.degenerate_restarts,
                    error: None,
                },
                Err(e) => VqaCell { circuit: text.clone(), mean_r: None, std_r: None, reports: Vec::new(), degenerate_restarts: 0, error: Some(e.to_string()) },
            }
        };
        let cells = run_cells(ctx, &command, cfg, sq.circuits.len(), cell)?;
        let mut main = format!("{}\n", SqueezingReport::CSV_HEADER);
        let mut table = String::from("circuit,mean_r,std_r,repetitions,degenerate_restarts,error\n");
        let mut summary = Vec::new();
        for c in &cells {
            for r in &c.reports {
                main.push_str(&r.csv_row());
                main.push('\n');
            }
            table.push_str(&format!(
                "{},{},{},{},{},{}\n",
                c.circuit,
                opt_num(c.mean_r),
                opt_num(c.std_r),
                c.reports.len(),
                c.degenerate_restarts,
                c.error.as_deref().map(csv_text).unwrap_or_default()
            ));
            summary.push(match (c.mean_r, c.std_r, &c.error) {
                (Some(m), Some(s), None) => format!("{}: r = {m:.3} +- {s:.3} dB", c.circuit),
                _ => format!("{}: failed: {}", c.circuit, c.error.as_deref().unwrap_or("unknown")),
            });
        }
        let summary_path = ctx.sibling("summary");
        write_atomic(&ctx.out, &main)?;
        write_atomic(&summary_path, &table)?;
        let failed_cells = cells.iter().filter(|c| c.error.is_some()).count();
        return Ok(CommandOutcome { files: vec![ctx.out.clone(), summary_path], failed_cells, summary });
    }

    let (thetas, alphas) = (cfg.thetas(), cfg.alphas());
    let cell = |i: usize| -> SqueezeCell {
        let (theta, alpha) = (thetas[i % thetas.len()], alphas[i / thetas.len()]);
        let run = || -> Result<SqueezingReport> {
            let model = ModelParams::new(n, sq.gamma, alpha, theta)?;
            match protocol {
                SqueezeProtocol::Ground => ground_state_squeezing(&model),
                _ => Quench::new(&model)?.optimize(sq.t_max, sq.n_steps),
            }
        };
        match run() {
            Ok(report) => SqueezeCell { theta, alpha, report: Some(report), error: None },
            Err(e @ Error::DegeneratePolarization(_)) => {
                log::debug!("theta={theta} alpha={alpha}: {e}");
                SqueezeCell { theta, alpha, report: None, error: None }
            }
            Err(e) => SqueezeCell { theta, alpha, report: None, error: Some(e.to_string()) },
        }
    };
    let cells = run_cells(ctx, &command, cfg, thetas.len() * alphas.len(), cell)?;
    let mut main = format!("{}\n", SqueezingReport::CSV_HEADER);
    let label = match protocol {
        SqueezeProtocol::Ground => "ground",
        _ => "quench",
    };
    for c in &cells {
        match &c.report {
            Some(r) => main.push_str(&r.csv_row()),
            None => main.push_str(&format!("{label},{},{},,,,,", csv_num(c.theta), csv_num(c.alpha))),
        }
        main.push('\n');
    }
    let best = cells
        .iter()
        .filter_map(|c| c.report.as_ref())
        .max_by(|a, b| a.r_db.total_cmp(&b.r_db));
    let mut summary = Vec::new();
    if let Some(b) = best {
        summary.push(format!(
            "max r = {:.4} dB at theta={:.4} pi, alpha={}",
            b.r_db,
            b.theta.unwrap_or(f64::NAN) / PI,
            b.alpha.unwrap_or(f64::NAN)
        ));
    }
    write_atomic(&ctx.out, &main)?;
    let failed_cells = cells.iter().filter(|c| c.error.is_some()).count();
    Ok(CommandOutcome { files: vec![ctx.out.clone()], failed_cells, summary })
}

/// `(R_Q, L)` of a circuit.
pub fn gate_count(spec: &str, n_qubits: usize, gamma: f64) -> Result<(usize, usize)> {
    let spec = CircuitSpec::parse(spec, n_qubits, gamma)?;
    Ok((spec.count_two_qubit_gates(), spec.count_parameters()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SweepConfig {
        let mut cfg = SweepConfig::default();
        cfg.model.n_qubits = 4;
        cfg.model.theta_pi = Grid::Values(vec![0.1, 0.3]);
        cfg.model.alpha = Grid::Values(vec![1.0]);
        cfg.vqe.circuits = vec!["11".into()];
        cfg.vqe.restarts = 2;
        cfg
    }

    #[test]
    fn grids() {
        assert_eq!(Grid::Range { start: 0.0, stop: 0.5, points: 3 }.values(), vec![0.0, 0.25, 0.5]);
        assert_eq!(Grid::Range { start: 2.0, stop: 9.0, points: 1 }.values(), vec![2.0]);
        let cfg = SweepConfig::default();
        assert_eq!(cfg.thetas().len(), 21);
        assert_eq!(cfg.alphas().len(), 13);
        assert!((cfg.thetas()[20] - PI / 2.0).abs() < 1e-15);
    }

    #[test]
    fn parses_toml() {
        let cfg = SweepConfig::from_toml(
            r#"
            seed = 7
            [model]
            n_qubits = 6
            gammas = [1.0, 0.5]
            theta_pi = { start = 0.0, stop = 0.5, points = 5 }
            alpha = [0.5, 3.0]
            [vqe]
            circuits = ["1122"]
            restarts = 3
            mode = "direct"
            [vqe.optimizer]
            max_iterations = 500
            "#,
        )
        .unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.model.theta_pi.values().len(), 5);
        assert_eq!(cfg.alphas(), vec![0.5, 3.0]);
        assert_eq!(cfg.vqe.mode, TrainingMode::Direct);
        assert_eq!(cfg.vqe.optimizer.max_iterations, 500);
        assert_eq!(cfg.vqe.optimizer.history_size, 10);
    }

    #[test]
    fn diagnostics_name_fields() {
        let field_of = |text: &str| match SweepConfig::from_toml(text).and_then(|c| c.validate()) {
            Err(Error::Config { field, .. }) => field,
            other => panic!("{other:?}"),
        };
        assert_eq!(field_of("[model]\nn_qubits = 30"), "model.n_qubits");
        assert_eq!(field_of("[model]\ngammas = [1.5]"), "model.gammas");
        assert_eq!(field_of("[model]\ntheta_pi = [0.7]"), "model.theta_pi");
        assert_eq!(field_of("[model]\nalpha = []"), "model.alpha");
        assert_eq!(field_of("[model]\nalpha = [-1.0]"), "model.alpha");
        assert_eq!(field_of("[vqe]\ncircuits = [\"1a\"]"), "vqe.circuits");
        assert_eq!(field_of("[vqe]\nrestarts = 0"), "vqe.restarts");
        assert_eq!(field_of("[vqe.optimizer]\nhistory_size = 0"), "vqe.optimizer.history_size");
        assert_eq!(field_of("[vqe.optimizer]\nseed = 3"), "vqe.optimizer.seed");
        assert_eq!(field_of("[squeeze]\nn_steps = 1"), "squeeze.n_steps");
        assert_eq!(field_of("[squeeze]\nt_max = 0.0"), "squeeze.t_max");
        assert_eq!(field_of("[scaling]\nk_values = [0]"), "scaling.k_values");
        assert_eq!(field_of("[scaling]\ntarget_fidelity = 1.5"), "scaling.target_fidelity");
        assert_eq!(field_of("\n\n[model]\nbogus = 1"), "line 4");
        assert_eq!(field_of("seed = \"x\""), "line 1");
    }

    #[test]
    fn env_overrides() {
        let mut cfg = SweepConfig::default();
        cfg.apply_env(|k| match k {
            ENV_OUT => Some("x/out.csv".into()),
            ENV_WORKERS => Some("3".into()),
            _ => None,
        })
        .unwrap();
        assert_eq!(cfg.out, Some(PathBuf::from("x/out.csv")));
        assert_eq!(cfg.workers, 3);
        assert!(cfg.apply_env(|k| (k == ENV_WORKERS).then(|| "many".into())).is_err());
    }

    #[test]
    fn sibling_paths() {
        let ctx = RunContext { out: "dir/run.csv".into(), workers: 1, resume: false };
        assert_eq!(ctx.sibling("ridge"), PathBuf::from("dir/run_ridge.csv"));
        assert_eq!(ctx.checkpoint(), PathBuf::from("dir/run.csv.ckpt"));
    }

    #[test]
    fn vqe_sweep_resumes_and_is_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = small();
        let run = |name: &str, workers: usize, resume: bool| {
            let ctx = RunContext { out: dir.path().join(name), workers, resume };
            let outcome = cmd_vqe_sweep(&cfg, &ctx).unwrap();
            assert_eq!(outcome.failed_cells, 0);
            (fs::read_to_string(&ctx.out).unwrap(), ctx)
        };
        let (one, _) = run("a.csv", 1, false);
        let (two, ctx) = run("b.csv", 2, false);
        assert_eq!(one, two);
        assert_eq!(one.lines().count(), 3);

        // keep one finished cell, altered so reuse is visible
        let ckpt = fs::read_to_string(ctx.checkpoint()).unwrap();
        let mut lines: Vec<String> = ckpt.lines().take(2).map(String::from).collect();
        let rq = gate_count("11", 4, 1.0).unwrap().0;
        lines[1] = lines[1].replace(&format!("\"rq\":{rq}"), "\"rq\":99");
        fs::write(ctx.checkpoint(), lines.join("\n") + "\n").unwrap();
        let (resumed, _) = run("b.csv", 2, true);
        assert!(resumed.contains(",99,"));
        assert_eq!(resumed.replace(",99,", &format!(",{rq},")), one);
    }

    #[test]
    fn checkpoint_must_match_config() {
        let dir = tempfile::tempdir().unwrap();
        let ctx = RunContext { out: dir.path().join("s.csv"), workers: 1, resume: true };
        let mut cfg = small();
        cfg.model.theta_pi = Grid::Values(vec![0.1]);
        cmd_vqe_sweep(&cfg, &ctx).unwrap();
        cfg.seed = 1;
        assert!(matches!(cmd_vqe_sweep(&cfg, &ctx), Err(Error::Config { .. })));
    }

    #[test]
    fn summaries() {
        let rec = |f: f64, cr: f64, err: bool| SweepRecord {
            gamma: 1.0,
            circuit: "11".into(),
            theta: 0.0,
            alpha: 0.0,
            best_fidelity: Some(f),
            mean_fidelity: Some(f),
            lowest_cost_fidelity: Some(f),
            mean_iterations: Some(1.0),
            cr: Some(cr),
            rq: 6,
            n_parameters: 14,
            success_fraction: Some(1.0),
            seed: 0,
            error: err.then(|| "boom, bad".into()),
        };
        let s = summarize(&[rec(0.9, 10.0, false), rec(1.0, 30.0, false), rec(0.1, 99.0, true)]);
        assert_eq!(s.len(), 1);
        assert_eq!((s[0].f_min, s[0].f_avg, s[0].cr_max, s[0].points, s[0].failed), (0.9, 0.95, 30.0, 2, 1));
        assert!(rec(0.1, 1.0, true).csv_row().ends_with(",\"boom, bad\""));
    }

    #[test]
    fn ed_sweep_single_point() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = small();
        cfg.model.theta_pi = Grid::Values(vec![0.0]);
        let ctx = RunContext { out: dir.path().join("ed.csv"), workers: 1, resume: false };
        cmd_ed_sweep(&cfg, &ctx).unwrap();
        let text = fs::read_to_string(&ctx.out).unwrap();
        assert_eq!(text, "gamma,theta,alpha,entropy,is_ridge\n1,0,1,0,1\n");
        assert!(ctx.sibling("ridge").exists());
    }

    #[test]
    fn squeeze_ground_rows() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = small();
        cfg.model.theta_pi = Grid::Values(vec![0.0, 0.25, 0.5]);
        let ctx = RunContext { out: dir.path().join("sq.csv"), workers: 1, resume: false };
        cmd_squeeze(&cfg, &ctx, SqueezeProtocol::Ground).unwrap();
        let text = fs::read_to_string(&ctx.out).unwrap();
        let rows: Vec<&str> = text.lines().collect();
        assert_eq!(rows[0], SqueezingReport::CSV_HEADER);
        let first: Vec<&str> = rows[1].split(',').collect();
        assert_eq!(&first[..3], &["ground", "0", "1"]);
        assert!(first[3].parse::<f64>().unwrap() < 1e-9);
        // pure coupling leaves no net polarization
        assert!(rows[3].ends_with(",,,,,"));
    }

    #[test]
    fn gate_counts() {
        assert_eq!(gate_count("332211", 10, 1.0).unwrap(), (96, 108));
        assert_eq!(gate_count("111111", 10, 1.0).unwrap(), (108, 114));
        assert_eq!(gate_count("212121", 10, 0.5).unwrap(), (153, 111));
    }
}
