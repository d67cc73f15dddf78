//! Experiment execution: seeded point sampling, parallel evaluation, and
//! CSV + manifest output.
//!
//! Every run derives one sub-seed per sampled point (or per analyzed state)
//! from the master seed, evaluates points in parallel with order-restoring
//! aggregation, and writes two files: a CSV of results whose first line
//! names the format version, and a JSON manifest echoing the full resolved
//! configuration. Re-running the same configuration reproduces the CSV byte
//! for byte.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::averaging::{
    cesaro_backward, forward_ball_report, tree_sweep_backward, AveragingError, AveragingReport,
    ReportRow,
};
use crate::markov::{MarkovChain, MarkovError};
use crate::numeric::subseed;
use crate::systems::{CircleRotationAction, System, SystemError};
use crate::tiling::{greedy_tile, tiling_parameter_sweep, TileAssignment, TilingError, TilingResult};
use crate::words::{random_tree, RightRootedTree, WordError};

use super::config::{
    chain_by_name, forward_rank, parse_explicit_trees, shift_system_by_id, ConfigError,
    ExperimentConfig, ExperimentKind, TileRuleSpec, TreeSpec,
};

/// Version tag written as the first token of every CSV comment header.
pub const CSV_FORMAT: &str = "ergolab-csv-v1";

/// Column header of averaging CSVs (backward, boundary, forward).
pub const AVERAGE_HEADER: &str = "point_id,n,total_weight,average,target,abs_error";

/// Column header of tiling CSVs.
pub const TILING_HEADER: &str = "point_id,N,coverage,untiled_band,untiled_overflow";

/// Column header of Markov-analysis CSVs.
pub const MARKOV_HEADER: &str = "state,samples,mean_return,censored_fraction,\
survival_1,survival_2,survival_3,survival_4,survival_5,\
survival_6,survival_7,survival_8,survival_9,survival_10";

/// Errors raised while executing a validated experiment.
#[derive(Debug, Error)]
pub enum RunError {
    /// The configuration itself is unusable (also raised when `run` is
    /// handed an unvalidated config).
    #[error(transparent)]
    Config(#[from] ConfigError),
    /// An averaging computation failed.
    #[error(transparent)]
    Averaging(#[from] AveragingError),
    /// A tiling computation failed.
    #[error(transparent)]
    Tiling(#[from] TilingError),
    /// A system operation failed.
    #[error(transparent)]
    System(#[from] SystemError),
    /// A chain simulation failed.
    #[error(transparent)]
    Markov(#[from] MarkovError),
    /// A tree could not be built.
    #[error(transparent)]
    Words(#[from] WordError),
    /// An output file could not be written.
    #[error("cannot write {path}: {source}")]
    Io {
        /// Path that failed.
        path: PathBuf,
        /// Underlying error.
        #[source]
        source: std::io::Error,
    },
    /// The worker pool could not be created.
    #[error("worker pool: {0}")]
    Pool(String),
}

/// Parameters chosen by an ε-driven tiling sweep.
#[derive(Debug, Clone, Serialize)]
pub struct SweepSummary {
    /// The requested coverage slack.
    pub epsilon: f64,
    /// Tile-height quantile chosen from the sampled points.
    pub band_height: usize,
    /// Triangle depth derived from ε and the band height.
    pub n: usize,
    /// Fraction of points whose coverage reached `1 − ε`.
    pub success_fraction: f64,
}

/// Record of one completed run: where the CSV went, which sub-seeds each
/// point used, and the configuration that produced it.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    /// Crate version that produced the run.
    pub version: String,
    /// Experiment kind name.
    pub kind: String,
    /// System (or chain) id.
    pub system: String,
    /// Master seed.
    pub seed: u64,
    /// Where the CSV was written.
    pub csv: PathBuf,
    /// Data rows in the CSV (excluding the two header lines).
    pub rows: usize,
    /// Per-point (or per-state) seeds derived from the master seed.
    pub sub_seeds: Vec<u64>,
    /// Largest truncation tail any row incurred; `0` for exact runs.
    pub max_truncation_tail: f64,
    /// Wall-clock duration of the computation, in milliseconds.
    pub wall_ms: u64,
    /// Sweep-chosen parameters, for ε-driven tiling runs.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSummary>,
    /// Full echo of the resolved configuration.
    pub config: ExperimentConfig,
}

impl RunManifest {
    /// Where the manifest JSON is written: the CSV path with a
    /// `manifest.json` extension.
    #[must_use]
    pub fn manifest_path(&self) -> PathBuf {
        self.csv.with_extension("manifest.json")
    }
}

/// Everything a kind-specific runner produces.
struct KindOutput {
    header: &'static str,
    rows: Vec<String>,
    sub_seeds: Vec<u64>,
    max_truncation_tail: f64,
    sweep: Option<SweepSummary>,
}

/// Executes a configuration: validates it, computes all rows (in parallel
/// across points), and writes the CSV and its manifest.
pub fn run(config: &ExperimentConfig) -> Result<RunManifest, RunError> {
    config.validate()?;
    let start = Instant::now();
    let output = with_pool(config.workers, || dispatch(config))?;
    let wall_ms = u64::try_from(start.elapsed().as_millis()).unwrap_or(u64::MAX);

    let csv_path = config.out_path();
    let mut text = String::new();
    writeln!(
        text,
        "# {CSV_FORMAT} kind={} system={} seed={}",
        config.kind.name(),
        config.system,
        config.seed
    )
    .expect("string write");
    writeln!(text, "{}", output.header).expect("string write");
    for row in &output.rows {
        writeln!(text, "{row}").expect("string write");
    }
    write_file(&csv_path, &text)?;

    let manifest = RunManifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        kind: config.kind.name().to_string(),
        system: config.system.clone(),
        seed: config.seed,
        csv: csv_path,
        rows: output.rows.len(),
        sub_seeds: output.sub_seeds,
        max_truncation_tail: output.max_truncation_tail,
        wall_ms,
        sweep: output.sweep,
        config: config.clone(),
    };
    let manifest_text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    write_file(&manifest.manifest_path(), &format!("{manifest_text}\n"))?;
    Ok(manifest)
}

fn dispatch(config: &ExperimentConfig) -> Result<KindOutput, RunError> {
    match config.kind {
        ExperimentKind::Backward | ExperimentKind::Boundary => run_backward(config),
        ExperimentKind::Forward => run_forward(config),
        ExperimentKind::Tiling => run_tiling(config),
        ExperimentKind::MarkovAnalyze => run_markov(config),
    }
}

fn with_pool<T: Send>(
    workers: Option<usize>,
    job: impl FnOnce() -> Result<T, RunError> + Send,
) -> Result<T, RunError> {
    match workers {
        None => job(),
        Some(count) => rayon::ThreadPoolBuilder::new()
            .num_threads(count)
            .build()
            .map_err(|e| RunError::Pool(e.to_string()))?
            .install(job),
    }
}

fn point_seeds(master: u64, count: usize) -> Vec<u64> {
    (0..count).map(|i| subseed(master, i as u64)).collect()
}

fn point_id(index: usize) -> String {
    format!("p{index:03}")
}

fn write_file(path: &Path, text: &str) -> Result<(), RunError> {
    std::fs::write(path, text).map_err(|source| RunError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Formats an optional value, leaving the cell empty when absent.
fn cell(value: Option<f64>) -> String {
    value.map(|v| v.to_string()).unwrap_or_default()
}

fn average_row(point: &str, row: &ReportRow) -> String {
    format!(
        "{point},{},{},{},{},{}",
        row.index,
        row.total_weight,
        row.average,
        cell(row.target),
        cell(row.abs_error())
    )
}

fn run_backward(config: &ExperimentConfig) -> Result<KindOutput, RunError> {
    let system = config.resolve_system()?;
    let f = config.resolve_observable(system.as_ref())?;
    let policy = config.resolve_policy()?;
    let trees = build_trees(&config.tree, system.as_ref())?;
    let depth = match &trees {
        None => config.n_max + f.depth(),
        Some(family) => {
            family.iter().map(RightRootedTree::height).max().unwrap_or(0) + f.depth()
        }
    };
    let sub_seeds = point_seeds(config.seed, config.points);

    let reports: Vec<AveragingReport> = sub_seeds
        .par_iter()
        .map(|&seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x = system.sample_point(&mut rng, depth);
            match &trees {
                None => cesaro_backward(system.as_ref(), &f, config.n_max, &x, &policy),
                Some(family) => tree_sweep_backward(system.as_ref(), &f, family, &x),
            }
        })
        .collect::<Result<_, _>>()?;

    let mut rows = Vec::new();
    let mut max_tail = 0.0_f64;
    for (i, report) in reports.iter().enumerate() {
        let point = point_id(i);
        for row in &report.rows {
            max_tail = max_tail.max(row.truncation_tail);
            rows.push(average_row(&point, row));
        }
    }
    Ok(KindOutput {
        header: AVERAGE_HEADER,
        rows,
        sub_seeds,
        max_truncation_tail: max_tail,
        sweep: None,
    })
}

fn build_trees(
    spec: &TreeSpec,
    system: &dyn System,
) -> Result<Option<Vec<RightRootedTree>>, RunError> {
    let alphabet = system.alphabet();
    // Group alphabets get reduced trees; inadmissible branches would carry
    // zero weight anyway.
    let reduced = alphabet.inverse(0).is_some();
    match spec {
        TreeSpec::Complete => Ok(None),
        TreeSpec::Random {
            count,
            max_height,
            words,
            seed,
        } => {
            let family = (0..*count)
                .map(|i| {
                    random_tree(
                        &alphabet,
                        *max_height,
                        *words,
                        subseed(*seed, i as u64),
                        reduced,
                        None,
                    )
                })
                .collect::<Result<Vec<_>, _>>()?;
            Ok(Some(family))
        }
        TreeSpec::Explicit { trees } => Ok(Some(parse_explicit_trees(trees, &alphabet)?)),
    }
}

fn run_forward(config: &ExperimentConfig) -> Result<KindOutput, RunError> {
    let rank = forward_rank(&config.system)?;
    let action = CircleRotationAction::standard(rank);
    let chain = MarkovChain::uniform_free_group(rank);
    let wave = |t: f64| (std::f64::consts::TAU * t).cos();
    let sub_seeds = point_seeds(config.seed, config.points);

    let evaluations: Vec<Vec<crate::averaging::ForwardEvaluation>> = sub_seeds
        .par_iter()
        .map(|&seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let base: f64 = rng.gen();
            forward_ball_report(&action, &chain, config.n_max, base, &wave)
        })
        .collect::<Result<_, _>>()?;

    let mut rows = Vec::new();
    for (i, levels) in evaluations.iter().enumerate() {
        let point = point_id(i);
        for (n, eval) in levels.iter().enumerate() {
            // The circle average of the cosine wave is zero.
            let average = eval.average();
            rows.push(format!(
                "{point},{n},{},{average},0,{}",
                eval.mass,
                average.abs()
            ));
        }
    }
    Ok(KindOutput {
        header: AVERAGE_HEADER,
        rows,
        sub_seeds,
        max_truncation_tail: 0.0,
        sweep: None,
    })
}

fn build_assignment(rule: &TileRuleSpec) -> TileAssignment {
    match rule {
        TileRuleSpec::Constant { height } => TileAssignment::constant_triangle(*height),
        TileRuleSpec::BySymbol { heights } => TileAssignment::triangles_by_symbol(heights.clone()),
    }
}

fn tiling_row(point: &str, result: &TilingResult) -> String {
    format!(
        "{point},{},{},{},{}",
        result.n, result.coverage, result.untiled_band, result.untiled_overflow
    )
}

fn run_tiling(config: &ExperimentConfig) -> Result<KindOutput, RunError> {
    let assignment = build_assignment(&config.tiling.rule);
    if let Some(epsilon) = config.tiling.epsilon {
        let shift = shift_system_by_id(&config.system)?;
        let sweep = tiling_parameter_sweep(&shift, &assignment, epsilon, config.points, config.seed)?;
        let rows = sweep
            .rows
            .iter()
            .enumerate()
            .map(|(i, (_, result))| tiling_row(&point_id(i), result))
            .collect();
        let summary = SweepSummary {
            epsilon,
            band_height: sweep.band_height,
            n: sweep.n,
            success_fraction: sweep.success_fraction,
        };
        return Ok(KindOutput {
            header: TILING_HEADER,
            rows,
            sub_seeds: point_seeds(config.seed, config.points),
            max_truncation_tail: 0.0,
            sweep: Some(summary),
        });
    }

    let system = config.resolve_system()?;
    let n = config.tiling.n.unwrap_or(config.n_max);
    let depth = assignment.locality().max(1);
    let sub_seeds = point_seeds(config.seed, config.points);
    let results: Vec<TilingResult> = sub_seeds
        .par_iter()
        .map(|&seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x = system.sample_point(&mut rng, depth);
            greedy_tile(system.as_ref(), &assignment, n, &x)
        })
        .collect::<Result<_, _>>()?;
    let rows = results
        .iter()
        .enumerate()
        .map(|(i, result)| tiling_row(&point_id(i), result))
        .collect();
    Ok(KindOutput {
        header: TILING_HEADER,
        rows,
        sub_seeds,
        max_truncation_tail: 0.0,
        sweep: None,
    })
}

fn run_markov(config: &ExperimentConfig) -> Result<KindOutput, RunError> {
    let chain = chain_by_name(&config.system)?;
    let spec = &config.markov;
    let sub_seeds = point_seeds(config.seed, spec.states.len());
    let mut rows = Vec::with_capacity(spec.states.len());
    for (i, &state) in spec.states.iter().enumerate() {
        let stats = chain.expected_return_time(state, spec.horizon, spec.samples, sub_seeds[i])?;
        let mut row = format!(
            "{state},{},{},{}",
            stats.samples,
            stats.mean_return,
            stats.censored_fraction()
        );
        for k in 1..=10 {
            let survival = stats.survival_at(k).unwrap_or(0.0);
            write!(row, ",{survival}").expect("string write");
        }
        rows.push(row);
    }
    Ok(KindOutput {
        header: MARKOV_HEADER,
        rows,
        sub_seeds,
        max_truncation_tail: 0.0,
        sweep: None,
    })
}
