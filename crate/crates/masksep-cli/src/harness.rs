//! Experiment harness: sparsity x rank phase grids and the deconvolution
//! error curve, with deterministic per-trial seeding, CSV outputs, and
//! heatmap rendering.
//!
//! Every trial derives its seed from `(master_seed, cell values, trial)`
//! alone, work items are computed independently, and rows are sorted
//! before writing, so outputs do not depend on the worker count. The
//! `seconds` column is wall time and is the one non-reproducible column;
//! `strip_seconds_column` yields the canonical byte-comparable view.

use crate::io::IoError;
use crate::render::{render_heatmap_to_path, HeatField};
use masksep_core::mask::{build_blur_mask, build_eda_mask_with, build_gaussian_mask, Mask};
use masksep_core::matrix::Matrix;
use masksep_core::model::{
    eda_tonic, gaussian_noise, random_low_rank, random_sparse, LowRankKind, LowRankModelSpec,
    SingularValueRule, SparseModelSpec,
};
use masksep_core::rng::derive_seed;
use masksep_core::solver::{relative_error, solve_masked_separation, SolverConfig, SolverStatus};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    PhaseBlur,
    PhaseGaussian,
    Eda,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GammaRule {
    InvSqrtM,
    InvSqrtN,
    Explicit(f64),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub m: usize,
    pub n: usize,
    pub p: usize,
    #[serde(default)]
    pub sparsity_levels: Vec<f64>,
    #[serde(default)]
    pub ranks: Vec<usize>,
    #[serde(default)]
    pub event_counts: Vec<usize>,
    pub trials: usize,
    pub gamma_rule: GammaRule,
    #[serde(default = "default_solver")]
    pub solver: SolverConfig,
    pub master_seed: u64,
    pub out_dir: PathBuf,
    /// Worker threads; 0 means one per available core.
    #[serde(default)]
    pub parallelism: usize,
    #[serde(default = "default_tonic_amplitude")]
    pub tonic_amplitude: f64,
    #[serde(default = "default_noise_sigma")]
    pub noise_sigma: f64,
    #[serde(default = "default_value_low")]
    pub value_low: f64,
    #[serde(default = "default_value_high")]
    pub value_high: f64,
}

fn default_solver() -> SolverConfig {
    SolverConfig::new(0.1)
}

fn default_tonic_amplitude() -> f64 {
    1.0
}

fn default_noise_sigma() -> f64 {
    0.01
}

fn default_value_low() -> f64 {
    1.0
}

fn default_value_high() -> f64 {
    2.0
}

impl ExperimentConfig {
    /// Reference phase-grid setup: 100 x 100, eleven sparsity levels
    /// from 1% to 30%, ranks 1 to 28, eight trials, gamma = 1/sqrt(m).
    pub fn reference_phase(kind: ExperimentKind, out_dir: PathBuf) -> Self {
        let mut levels = vec![0.01];
        let mut s = 0.03f64;
        while s <= 0.3 + 1e-12 {
            levels.push((s * 100.0).round() / 100.0);
            s += 0.03;
        }
        Self {
            experiment: kind,
            m: 100,
            n: 100,
            p: 100,
            sparsity_levels: levels,
            ranks: (0..10).map(|k| 1 + 3 * k).collect(),
            event_counts: Vec::new(),
            trials: 8,
            gamma_rule: GammaRule::InvSqrtM,
            solver: default_solver(),
            master_seed: 0,
            out_dir,
            parallelism: 0,
            tonic_amplitude: default_tonic_amplitude(),
            noise_sigma: default_noise_sigma(),
            value_low: default_value_low(),
            value_high: default_value_high(),
        }
    }

    /// Reference deconvolution setup: 240 x 160 mask, 50 signals,
    /// 4..=30 events per signal, gamma = 1/sqrt(n), noise sd 0.01.
    pub fn reference_eda(out_dir: PathBuf) -> Self {
        Self {
            experiment: ExperimentKind::Eda,
            m: 240,
            n: 50,
            p: 160,
            sparsity_levels: Vec::new(),
            ranks: Vec::new(),
            event_counts: (2..=15).map(|k| 2 * k).collect(),
            trials: 8,
            gamma_rule: GammaRule::InvSqrtN,
            solver: default_solver(),
            master_seed: 0,
            out_dir,
            parallelism: 0,
            tonic_amplitude: default_tonic_amplitude(),
            noise_sigma: default_noise_sigma(),
            value_low: default_value_low(),
            value_high: default_value_high(),
        }
    }

    pub fn gamma(&self) -> f64 {
        match self.gamma_rule {
            GammaRule::InvSqrtM => 1.0 / (self.m as f64).sqrt(),
            GammaRule::InvSqrtN => 1.0 / (self.n as f64).sqrt(),
            GammaRule::Explicit(g) => g,
        }
    }

    fn validate(&self) -> Result<(), HarnessError> {
        if self.trials < 1 {
            return Err(HarnessError::Config("trials must be at least 1".into()));
        }
        match self.experiment {
            ExperimentKind::PhaseBlur | ExperimentKind::PhaseGaussian => {
                if self.sparsity_levels.is_empty() || self.ranks.is_empty() {
                    return Err(HarnessError::Config(
                        "phase experiments need sparsity_levels and ranks".into(),
                    ));
                }
                if self.sparsity_levels.iter().any(|&f| !(f > 0.0 && f <= 1.0)) {
                    return Err(HarnessError::Config(
                        "sparsity fractions must lie in (0, 1]".into(),
                    ));
                }
                if self.ranks.iter().any(|&r| r < 1 || r > self.m.min(self.n)) {
                    return Err(HarnessError::Config("rank out of range".into()));
                }
            }
            ExperimentKind::Eda => {
                if self.event_counts.is_empty() {
                    return Err(HarnessError::Config("eda needs event_counts".into()));
                }
                if self
                    .event_counts
                    .iter()
                    .any(|&c| c == 0 || c * self.n > self.p * self.n)
                {
                    return Err(HarnessError::Config("event count out of range".into()));
                }
            }
        }
        let gamma = self.gamma();
        if gamma <= 0.0 || gamma.is_nan() {
            return Err(HarnessError::Config("gamma must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("invalid experiment config: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] masksep_core::Error),
    #[error(transparent)]
    Io(#[from] IoError),
    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("thread pool: {0}")]
    Pool(String),
}

/// Per-trial outcome; `Error` marks a solve call that failed outright.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Converged,
    MaxIter,
    Diverged,
    Error,
}

impl RunStatus {
    pub fn name(self) -> &'static str {
        match self {
            RunStatus::Converged => "converged",
            RunStatus::MaxIter => "max_iter",
            RunStatus::Diverged => "diverged",
            RunStatus::Error => "error",
        }
    }

    fn from_solver(status: SolverStatus) -> Self {
        match status {
            SolverStatus::Converged => RunStatus::Converged,
            SolverStatus::MaxIter => RunStatus::MaxIter,
            SolverStatus::Diverged => RunStatus::Diverged,
        }
    }
}

/// One solve inside a grid: the cell coordinates, the derived seed, both
/// relative errors, and runtime metadata.
#[derive(Debug, Clone, Serialize)]
pub struct TrialRecord {
    /// Sparsity fraction for phase grids; events per signal for eda.
    pub x_value: f64,
    /// Rank for phase grids; unused (0) for eda.
    pub rank: usize,
    pub trial: usize,
    pub seed: u64,
    pub err_s: f64,
    pub err_l: f64,
    pub status: RunStatus,
    pub iterations: usize,
    pub seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CellSummary {
    pub x_value: f64,
    pub rank: usize,
    pub trials: usize,
    pub mean_err_s: f64,
    pub mean_err_l: f64,
}

#[derive(Debug)]
pub struct GridResult {
    pub records: Vec<TrialRecord>,
    pub cells: Vec<CellSummary>,
    pub wall_seconds: f64,
    pub grid_csv: PathBuf,
    pub cells_csv: PathBuf,
}

fn in_pool<T: Send>(
    parallelism: usize,
    body: impl FnOnce() -> T + Send,
) -> Result<T, HarnessError> {
    if parallelism == 0 {
        return Ok(body());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism)
        .build()
        .map_err(|e| HarnessError::Pool(e.to_string()))?;
    Ok(pool.install(body))
}

fn trial_seed(master: u64, x_bits: u64, rank: u64, trial: u64) -> u64 {
    master ^ derive_seed(0x7472_6961_6c5f, &[x_bits, rank, trial])
}

fn sort_records(records: &mut [TrialRecord]) {
    records.sort_by(|a, b| {
        a.x_value
            .total_cmp(&b.x_value)
            .then(a.rank.cmp(&b.rank))
            .then(a.trial.cmp(&b.trial))
    });
}

fn summarize(records: &[TrialRecord]) -> Vec<CellSummary> {
    let mut cells: Vec<CellSummary> = Vec::new();
    for record in records {
        match cells.last_mut() {
            Some(cell) if cell.x_value == record.x_value && cell.rank == record.rank => {
                cell.trials += 1;
                cell.mean_err_s += record.err_s;
                cell.mean_err_l += record.err_l;
            }
            _ => cells.push(CellSummary {
                x_value: record.x_value,
                rank: record.rank,
                trials: 1,
                mean_err_s: record.err_s,
                mean_err_l: record.err_l,
            }),
        }
    }
    for cell in &mut cells {
        cell.mean_err_s /= cell.trials as f64;
        cell.mean_err_l /= cell.trials as f64;
    }
    cells
}

fn write_text(path: &Path, text: &str) -> Result<(), HarnessError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|source| HarnessError::File {
                path: path.to_path_buf(),
                source,
            })?;
        }
    }
    fs::write(path, text).map_err(|source| HarnessError::File {
        path: path.to_path_buf(),
        source,
    })
}

fn grid_csv_text(records: &[TrialRecord], x_name: &str) -> String {
    let mut out = format!("{x_name},rank,trial,seed,err_S,err_L,status,iters,seconds\n");
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.x_value,
            r.rank,
            r.trial,
            r.seed,
            r.err_s,
            r.err_l,
            r.status.name(),
            r.iterations,
            r.seconds
        )
        .expect("string write");
    }
    out
}

fn cells_csv_text(cells: &[CellSummary], x_name: &str) -> String {
    let mut out = format!("{x_name},rank,trials,mean_err_S,mean_err_L\n");
    for c in cells {
        writeln!(
            out,
            "{},{},{},{},{}",
            c.x_value, c.rank, c.trials, c.mean_err_s, c.mean_err_l
        )
        .expect("string write");
    }
    out
}

/// Drop the trailing `seconds` column from a harness CSV: the canonical
/// view that replays bit-identically across runs and worker counts.
pub fn strip_seconds_column(csv_text: &str) -> String {
    let mut out = String::with_capacity(csv_text.len());
    for line in csv_text.lines() {
        match line.rfind(',') {
            Some(pos) => out.push_str(&line[..pos]),
            None => out.push_str(line),
        }
        out.push('\n');
    }
    out
}

fn run_one_solve(
    h: &Matrix,
    s0: &Matrix,
    l0: &Matrix,
    config: &SolverConfig,
) -> (f64, f64, RunStatus, usize) {
    let m0 = h.matmul(s0).add(l0);
    match solve_masked_separation(&m0, h, config) {
        Ok(result) => {
            let status = RunStatus::from_solver(result.status);
            if status == RunStatus::Diverged {
                (f64::NAN, f64::NAN, status, result.iterations)
            } else {
                let err_s = relative_error(s0, &result.s_hat).unwrap_or(f64::NAN);
                let err_l = relative_error(l0, &result.l_hat).unwrap_or(f64::NAN);
                (err_s, err_l, status, result.iterations)
            }
        }
        Err(_) => (f64::NAN, f64::NAN, RunStatus::Error, 0),
    }
}

fn experiment_mask(config: &ExperimentConfig) -> Result<Mask, HarnessError> {
    Ok(match config.experiment {
        ExperimentKind::PhaseBlur => build_blur_mask(config.p)?,
        ExperimentKind::PhaseGaussian => build_gaussian_mask(
            config.m,
            config.p,
            derive_seed(config.master_seed, &[0x6d61_736b]),
        )?,
        ExperimentKind::Eda => {
            // kernel window scaled so its length matches p at 4 samples/s
            build_eda_mask_with(2.0, 0.75, 4.0, config.p as f64 / 4.0, config.m, config.p)?
        }
    })
}

/// Sweep the sparsity x rank grid, solve every cell `trials` times, and
/// write grid.csv, grid_cells.csv, and the two heatmaps.
pub fn run_phase_experiment(config: &ExperimentConfig) -> Result<GridResult, HarnessError> {
    config.validate()?;
    if config.experiment == ExperimentKind::Eda {
        return Err(HarnessError::Config(
            "run_phase_experiment called with an eda config".into(),
        ));
    }
    let started = Instant::now();
    let mask = experiment_mask(config)?;
    let gamma = config.gamma();
    let mut solver = config.solver.clone();
    solver.gamma = gamma;

    let mut items = Vec::new();
    for &fraction in &config.sparsity_levels {
        for &rank in &config.ranks {
            for trial in 0..config.trials {
                items.push((fraction, rank, trial));
            }
        }
    }

    let h = mask.h();
    let mut records: Vec<TrialRecord> = in_pool(config.parallelism, || {
        items
            .par_iter()
            .map(|&(fraction, rank, trial)| {
                let seed = trial_seed(
                    config.master_seed,
                    fraction.to_bits(),
                    rank as u64,
                    trial as u64,
                );
                let support = ((fraction * (config.p * config.n) as f64).round() as usize)
                    .min(config.p * config.n);
                let clock = Instant::now();
                let outcome = (|| -> Result<_, masksep_core::Error> {
                    let s0 = random_sparse(&SparseModelSpec {
                        p: config.p,
                        n: config.n,
                        s: support,
                        value_low: config.value_low,
                        value_high: config.value_high,
                        seed: derive_seed(seed, &[1]),
                    })?;
                    let (l0, _) = random_low_rank(&LowRankModelSpec {
                        m: config.m,
                        n: config.n,
                        r: rank,
                        kind: LowRankKind::Orthogonal,
                        singular_values: SingularValueRule::UnitRms,
                        seed: derive_seed(seed, &[2]),
                    })?;
                    Ok((s0, l0))
                })();
                let (err_s, err_l, status, iterations) = match outcome {
                    Ok((s0, l0)) => run_one_solve(h, &s0, &l0, &solver),
                    Err(_) => (f64::NAN, f64::NAN, RunStatus::Error, 0),
                };
                TrialRecord {
                    x_value: fraction,
                    rank,
                    trial,
                    seed,
                    err_s,
                    err_l,
                    status,
                    iterations,
                    seconds: clock.elapsed().as_secs_f64(),
                }
            })
            .collect()
    })?;
    sort_records(&mut records);
    let cells = summarize(&records);

    let grid_csv = config.out_dir.join("grid.csv");
    let cells_csv = config.out_dir.join("grid_cells.csv");
    write_text(&grid_csv, &grid_csv_text(&records, "sparsity_fraction"))?;
    write_text(&cells_csv, &cells_csv_text(&cells, "sparsity_fraction"))?;
    render_heatmap_to_path(
        &grid_csv,
        HeatField::ErrS,
        &config.out_dir.join("err_S.ppm"),
    )
    .map_err(HarnessError::Io)?;
    render_heatmap_to_path(
        &grid_csv,
        HeatField::ErrL,
        &config.out_dir.join("err_L.ppm"),
    )
    .map_err(HarnessError::Io)?;
    write_run_metadata(config, started.elapsed().as_secs_f64())?;

    Ok(GridResult {
        records,
        cells,
        wall_seconds: started.elapsed().as_secs_f64(),
        grid_csv,
        cells_csv,
    })
}

/// Sweep event counts for the deconvolution model `Y = T + H X + E` and
/// write curve.csv / curve_points.csv. err_S is the X error and err_L
/// the T error.
pub fn run_eda_experiment(config: &ExperimentConfig) -> Result<GridResult, HarnessError> {
    config.validate()?;
    if config.experiment != ExperimentKind::Eda {
        return Err(HarnessError::Config(
            "run_eda_experiment needs an eda config".into(),
        ));
    }
    let started = Instant::now();
    let mask = experiment_mask(config)?;
    let gamma = config.gamma();
    let mut solver = config.solver.clone();
    solver.gamma = gamma;

    let mut items = Vec::new();
    for &events in &config.event_counts {
        for trial in 0..config.trials {
            items.push((events, trial));
        }
    }

    let h = mask.h();
    let mut records: Vec<TrialRecord> = in_pool(config.parallelism, || {
        items
            .par_iter()
            .map(|&(events, trial)| {
                let seed = trial_seed(config.master_seed, events as u64, 0, trial as u64);
                let clock = Instant::now();
                let outcome = (|| -> Result<_, masksep_core::Error> {
                    let x = random_sparse(&SparseModelSpec {
                        p: config.p,
                        n: config.n,
                        s: events * config.n,
                        value_low: config.value_low,
                        value_high: config.value_high,
                        seed: derive_seed(seed, &[1]),
                    })?;
                    let tonic = eda_tonic(config.m, config.n, config.tonic_amplitude)?;
                    let noise = gaussian_noise(
                        config.m,
                        config.n,
                        config.noise_sigma,
                        derive_seed(seed, &[3]),
                    )?;
                    Ok((x, tonic, noise))
                })();
                let (err_s, err_l, status, iterations) = match outcome {
                    Ok((x, tonic, noise)) => {
                        let y = h.matmul(&x).add(&tonic).add(&noise);
                        match solve_masked_separation(&y, h, &solver) {
                            Ok(result) => {
                                let status = RunStatus::from_solver(result.status);
                                if status == RunStatus::Diverged {
                                    (f64::NAN, f64::NAN, status, result.iterations)
                                } else {
                                    (
                                        relative_error(&x, &result.s_hat).unwrap_or(f64::NAN),
                                        relative_error(&tonic, &result.l_hat).unwrap_or(f64::NAN),
                                        status,
                                        result.iterations,
                                    )
                                }
                            }
                            Err(_) => (f64::NAN, f64::NAN, RunStatus::Error, 0),
                        }
                    }
                    Err(_) => (f64::NAN, f64::NAN, RunStatus::Error, 0),
                };
                TrialRecord {
                    x_value: events as f64,
                    rank: 0,
                    trial,
                    seed,
                    err_s,
                    err_l,
                    status,
                    iterations,
                    seconds: clock.elapsed().as_secs_f64(),
                }
            })
            .collect()
    })?;
    sort_records(&mut records);
    let cells = summarize(&records);

    let grid_csv = config.out_dir.join("curve.csv");
    let cells_csv = config.out_dir.join("curve_points.csv");
    write_text(&grid_csv, &grid_csv_text(&records, "events"))?;
    write_text(&cells_csv, &cells_csv_text(&cells, "events"))?;
    write_run_metadata(config, started.elapsed().as_secs_f64())?;

    Ok(GridResult {
        records,
        cells,
        wall_seconds: started.elapsed().as_secs_f64(),
        grid_csv,
        cells_csv,
    })
}

fn write_run_metadata(config: &ExperimentConfig, wall_seconds: f64) -> Result<(), HarnessError> {
    let meta = serde_json::json!({
        "config": config,
        "wall_seconds": wall_seconds,
        "version": env!("CARGO_PKG_VERSION"),
    });
    write_text(
        &config.out_dir.join("run_meta.json"),
        &format!("{:#}\n", meta),
    )
}
