//! Experiment configuration: a TOML document (or CLI flags mapped onto the
//! same structure) describing one reproducible experiment.
//!
//! Every config names its experiment kind, a system (or chain), a master
//! seed, and the knobs of that experiment. Validation resolves referenced
//! ids eagerly so that a bad config fails before any work starts, and the
//! exact resolved configuration is echoed into the run manifest.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::markov::MarkovChain;
use crate::systems::{self, Observable, System};
use crate::words::{Alphabet, RightRootedTree, Symbol, Word};

/// Configuration problems: unreadable files, malformed documents, or
/// references that do not resolve.
#[derive(Debug, Error)]
pub enum ConfigError {
    /// The config file could not be read.
    #[error("cannot read config {path}: {source}")]
    Io {
        /// Path that failed to open.
        path: PathBuf,
        /// Underlying error.
        #[source]
        source: std::io::Error,
    },
    /// The document is not valid TOML for this schema.
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
    /// The document parsed but references something unknown or inconsistent.
    #[error("invalid config: {0}")]
    Invalid(String),
}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid(msg.into())
}

/// Which experiment to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    /// Cesàro backward averages over complete preimage sweeps or tree
    /// families.
    Backward,
    /// Forward group averages over word balls of a rotation action.
    Forward,
    /// Backward ball averages on a boundary shift.
    Boundary,
    /// Greedy tilings at fixed depth, or an ε-driven parameter sweep.
    Tiling,
    /// Monte Carlo return-time analysis of a chain.
    #[serde(alias = "markov")]
    MarkovAnalyze,
}

impl ExperimentKind {
    /// Stable name used in CSV headers and manifests.
    #[must_use]
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Backward => "backward",
            ExperimentKind::Forward => "forward",
            ExperimentKind::Boundary => "boundary",
            ExperimentKind::Tiling => "tiling",
            ExperimentKind::MarkovAnalyze => "markov-analyze",
        }
    }
}

/// Observable selection. `Auto` picks the system's natural observable:
/// the identity on the Gauss interval, the cosine wave on rotation skews,
/// and the first-symbol indicator of 0 on shifts.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObservableSpec {
    /// Defer to the system's natural observable.
    #[default]
    Auto,
    /// `1` when the first coordinate equals `symbol`, else `0`.
    Indicator {
        /// The distinguished first coordinate.
        symbol: Symbol,
    },
    /// An arbitrary value per first coordinate.
    ByFirstSymbol {
        /// `values[s]` is the value at first coordinate `s`.
        values: Vec<f64>,
        /// Optional display name.
        #[serde(default)]
        name: Option<String>,
    },
    /// The constant function.
    Constant {
        /// The constant.
        value: f64,
    },
    /// The identity on a real interval.
    Identity,
    /// `cos 2πθ` on the base circle of a skew product.
    BaseCosine,
}

/// Which trees a backward experiment averages over.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TreeSpec {
    /// The complete preimage sweep `▷⁰ ⊆ ▷¹ ⊆ … ⊆ ▷ⁿ`; one row per level.
    #[default]
    Complete,
    /// A seeded family of random right-rooted trees; one row per tree.
    Random {
        /// How many trees.
        count: usize,
        /// Height cap per tree.
        max_height: usize,
        /// Word-count target per tree.
        words: usize,
        /// Seed of the tree family (independent of the point seed).
        seed: u64,
    },
    /// Explicit word lists, e.g. `["e", "0", "1.0"]`; one row per tree.
    Explicit {
        /// Each entry is one tree given as dotted words; `e` is the root.
        trees: Vec<Vec<String>>,
    },
}

/// Branch-expansion policy selection; `Auto` means full expansion on
/// finite-branching systems and a `1e-6` weight threshold on the Gauss map.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PolicySpec {
    /// Defer to the system's natural policy.
    #[default]
    Auto,
    /// Expand every enumerated branch.
    Full,
    /// Drop branches below an absolute weight; dropped mass is reported as
    /// truncation tail.
    Threshold {
        /// Weight cutoff.
        theta: f64,
    },
    /// Unbiased sampled expansion of sub-cutoff branch pools.
    Roulette {
        /// Weight cutoff.
        theta: f64,
        /// Optional explicit sampling seed; derived from the master seed
        /// when absent.
        #[serde(default)]
        seed: Option<u64>,
    },
}

/// Tile rule selection for tiling experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TileRuleSpec {
    /// Every point gets the triangle of this height.
    Constant {
        /// Tile height.
        height: usize,
    },
    /// Triangle height per first coordinate.
    BySymbol {
        /// `heights[s]` is the tile height at first coordinate `s`.
        heights: Vec<usize>,
    },
}

impl Default for TileRuleSpec {
    fn default() -> Self {
        TileRuleSpec::Constant { height: 2 }
    }
}

/// Tiling experiment knobs.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TilingSpec {
    /// The tile rule.
    #[serde(default)]
    pub rule: TileRuleSpec,
    /// Triangle depth for fixed-depth runs; defaults to the experiment's
    /// `n_max`. Ignored when `epsilon` is set.
    #[serde(default)]
    pub n: Option<usize>,
    /// When set, run the ε-parameter sweep (depth derived from ε) instead of
    /// fixed-depth tiling.
    #[serde(default)]
    pub epsilon: Option<f64>,
}

/// Markov-analysis knobs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarkovSpec {
    /// States to analyze.
    #[serde(default = "default_states")]
    pub states: Vec<Symbol>,
    /// Excursions per state.
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Steps before an excursion is censored.
    #[serde(default = "default_horizon")]
    pub horizon: usize,
}

fn default_states() -> Vec<Symbol> {
    vec![0]
}

fn default_samples() -> usize {
    100_000
}

fn default_horizon() -> usize {
    crate::markov::DEFAULT_RETURN_HORIZON
}

impl Default for MarkovSpec {
    fn default() -> Self {
        MarkovSpec {
            states: default_states(),
            samples: default_samples(),
            horizon: default_horizon(),
        }
    }
}

/// One complete experiment description.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// The experiment kind.
    pub kind: ExperimentKind,
    /// System id (or chain name for Markov analysis).
    pub system: String,
    /// Master seed; every random choice in the run derives from it.
    pub seed: u64,
    /// Sweep depth / ball radius / default triangle depth.
    #[serde(default = "default_n_max")]
    pub n_max: usize,
    /// How many points to sample.
    #[serde(default = "default_points")]
    pub points: usize,
    /// CSV output path; defaults to `<kind>.csv`.
    #[serde(default)]
    pub out: Option<PathBuf>,
    /// Worker threads; defaults to all available cores.
    #[serde(default)]
    pub workers: Option<usize>,
    /// Observable selection.
    #[serde(default)]
    pub observable: ObservableSpec,
    /// Tree selection for backward experiments.
    #[serde(default)]
    pub tree: TreeSpec,
    /// Branch-expansion policy.
    #[serde(default)]
    pub policy: PolicySpec,
    /// Tiling knobs.
    #[serde(default)]
    pub tiling: TilingSpec,
    /// Markov-analysis knobs.
    #[serde(default)]
    pub markov: MarkovSpec,
}

fn default_n_max() -> usize {
    12
}

fn default_points() -> usize {
    20
}

impl ExperimentConfig {
    /// A minimal config of the given kind; callers override fields as
    /// needed.
    #[must_use]
    pub fn new(kind: ExperimentKind, system: impl Into<String>, seed: u64) -> Self {
        ExperimentConfig {
            kind,
            system: system.into(),
            seed,
            n_max: default_n_max(),
            points: default_points(),
            out: None,
            workers: None,
            observable: ObservableSpec::default(),
            tree: TreeSpec::default(),
            policy: PolicySpec::default(),
            tiling: TilingSpec::default(),
            markov: MarkovSpec::default(),
        }
    }

    /// Parses a TOML document.
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let config: ExperimentConfig = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    /// Reads and parses a config file.
    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text)
    }

    /// The CSV output path, defaulting to `<kind>.csv`.
    #[must_use]
    pub fn out_path(&self) -> PathBuf {
        self.out
            .clone()
            .unwrap_or_else(|| PathBuf::from(format!("{}.csv", self.kind.name())))
    }

    /// Checks that every reference resolves and every knob is in range.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.points == 0 {
            return Err(invalid("points must be at least 1"));
        }
        if self.workers == Some(0) {
            return Err(invalid("workers must be at least 1"));
        }
        match self.kind {
            ExperimentKind::Backward | ExperimentKind::Boundary => {
                let system = self.resolve_system()?;
                if self.kind == ExperimentKind::Boundary
                    && !self.system.starts_with("boundary:")
                {
                    return Err(invalid(format!(
                        "boundary experiments need a boundary system, got {:?}",
                        self.system
                    )));
                }
                self.resolve_observable(system.as_ref())?;
                match &self.tree {
                    TreeSpec::Complete => {}
                    TreeSpec::Random {
                        count, max_height, ..
                    } => {
                        if *count == 0 {
                            return Err(invalid("tree.count must be at least 1"));
                        }
                        if *max_height == 0 {
                            return Err(invalid("tree.max_height must be at least 1"));
                        }
                    }
                    TreeSpec::Explicit { trees } => {
                        if trees.is_empty() {
                            return Err(invalid("tree.trees must not be empty"));
                        }
                        parse_explicit_trees(trees, &system.alphabet())?;
                    }
                }
                self.resolve_policy()?;
            }
            ExperimentKind::Forward => {
                forward_rank(&self.system)?;
                if !matches!(
                    self.observable,
                    ObservableSpec::Auto | ObservableSpec::BaseCosine
                ) {
                    return Err(invalid(
                        "forward experiments average base observables; use the cosine wave",
                    ));
                }
            }
            ExperimentKind::Tiling => {
                self.resolve_system()?;
                if let Some(eps) = self.tiling.epsilon {
                    if !(eps > 0.0 && eps < 1.0) {
                        return Err(invalid("tiling.epsilon must be in (0, 1)"));
                    }
                    shift_system_by_id(&self.system)?;
                }
            }
            ExperimentKind::MarkovAnalyze => {
                let chain = chain_by_name(&self.system)?;
                if self.markov.samples == 0 {
                    return Err(invalid("markov.samples must be at least 1"));
                }
                if self.markov.horizon == 0 {
                    return Err(invalid("markov.horizon must be at least 1"));
                }
                if self.markov.states.is_empty() {
                    return Err(invalid("markov.states must not be empty"));
                }
                if let Some(states) = chain.state_count() {
                    for &s in &self.markov.states {
                        if s as usize >= states {
                            return Err(invalid(format!(
                                "state {s} is outside the chain's {states} states"
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Resolves the system id against the catalog.
    pub fn resolve_system(&self) -> Result<Box<dyn System>, ConfigError> {
        systems::system_by_id(&self.system).map_err(|e| invalid(e.to_string()))
    }

    /// Resolves the observable spec against a concrete system.
    pub fn resolve_observable(&self, system: &dyn System) -> Result<Observable, ConfigError> {
        let k = system.alphabet().size();
        let check_symbol = |s: Symbol| -> Result<(), ConfigError> {
            if (s as usize) < k {
                Ok(())
            } else {
                Err(invalid(format!(
                    "symbol {s} is outside the system's {k}-symbol alphabet"
                )))
            }
        };
        match &self.observable {
            ObservableSpec::Auto => Ok(natural_observable(&self.system, k)),
            ObservableSpec::Indicator { symbol } => {
                check_symbol(*symbol)?;
                Ok(Observable::indicator_first_symbol(k, *symbol))
            }
            ObservableSpec::ByFirstSymbol { values, name } => {
                if values.len() != k {
                    return Err(invalid(format!(
                        "got {} values for a {k}-symbol alphabet",
                        values.len()
                    )));
                }
                let name = name.clone().unwrap_or_else(|| "by_first_symbol".into());
                Ok(Observable::by_first_symbol(values.clone(), name))
            }
            ObservableSpec::Constant { value } => Ok(Observable::constant(*value)),
            ObservableSpec::Identity => Ok(Observable::real_identity()),
            ObservableSpec::BaseCosine => Ok(Observable::base_cosine()),
        }
    }

    /// Resolves the policy spec, deriving the roulette seed from the master
    /// seed when absent.
    pub fn resolve_policy(&self) -> Result<crate::averaging::BranchPolicy, ConfigError> {
        use crate::averaging::BranchPolicy;
        let policy = match &self.policy {
            PolicySpec::Auto => {
                if self.system.starts_with("gauss:") {
                    BranchPolicy::Threshold {
                        theta: crate::averaging::DEFAULT_THRESHOLD_THETA,
                    }
                } else {
                    BranchPolicy::Full
                }
            }
            PolicySpec::Full => BranchPolicy::Full,
            PolicySpec::Threshold { theta } => {
                if !(theta.is_finite() && *theta > 0.0) {
                    return Err(invalid("threshold theta must be positive"));
                }
                BranchPolicy::Threshold { theta: *theta }
            }
            PolicySpec::Roulette { theta, seed } => {
                if !(theta.is_finite() && *theta > 0.0) {
                    return Err(invalid("roulette theta must be positive"));
                }
                BranchPolicy::Roulette {
                    theta: *theta,
                    seed: seed.unwrap_or_else(|| crate::numeric::subseed(self.seed, u64::MAX)),
                }
            }
        };
        Ok(policy)
    }
}

/// The observable `Auto` resolves to for a given system id.
fn natural_observable(system_id: &str, alphabet_size: usize) -> Observable {
    if system_id.starts_with("gauss:") {
        Observable::real_identity()
    } else if system_id.starts_with("skew:") {
        Observable::base_cosine()
    } else {
        Observable::indicator_first_symbol(alphabet_size, 0)
    }
}

/// Extracts the rank from a rotation-skew system id.
pub(crate) fn forward_rank(system_id: &str) -> Result<usize, ConfigError> {
    let rank: usize = system_id
        .strip_prefix("skew:rotation:r=")
        .and_then(|r| r.parse().ok())
        .ok_or_else(|| {
            invalid(format!(
                "forward experiments run on skew:rotation:r=<rank> systems, got {system_id:?}"
            ))
        })?;
    if rank == 0 || rank > crate::systems::CircleRotationAction::max_standard_rank() {
        return Err(invalid(format!("unsupported rotation rank {rank}")));
    }
    Ok(rank)
}

/// Builds the shift system behind a catalog id, for operations that need the
/// driving chain itself rather than a `dyn System` (tiling sweeps).
pub fn shift_system_by_id(id: &str) -> Result<crate::systems::MarkovShiftSystem, ConfigError> {
    let fail = || invalid(format!("tiling sweeps need a shift system, got {id:?}"));
    if let Some(k) = id.strip_prefix("bernoulli:") {
        let k: usize = k.parse().map_err(|_| fail())?;
        if k < 2 {
            return Err(fail());
        }
        return Ok(systems::bernoulli_system(k));
    }
    if id == "markov:two_state" {
        return systems::markov_shift_system(MarkovChain::two_state(), "two_state")
            .map_err(|e| invalid(e.to_string()));
    }
    if id == "blocks" {
        return Ok(systems::block_chain_system());
    }
    if let Some(rest) = id.strip_prefix("boundary:r=") {
        if let Some((r, "uniform")) = rest.split_once(':') {
            let r: usize = r.parse().map_err(|_| fail())?;
            if r == 0 {
                return Err(fail());
            }
            return systems::boundary_system(r, MarkovChain::uniform_free_group(r), "uniform")
                .map_err(|e| invalid(e.to_string()));
        }
    }
    Err(fail())
}

/// Resolves a chain name for Markov analysis.
pub fn chain_by_name(name: &str) -> Result<MarkovChain, ConfigError> {
    match name {
        "finfty_chain" => Ok(MarkovChain::finfty_chain()),
        "two_state" => Ok(MarkovChain::two_state()),
        "two_block" => Ok(MarkovChain::two_block()),
        _ => {
            if let Some(k) = name.strip_prefix("uniform:") {
                let k: usize = k
                    .parse()
                    .map_err(|_| invalid(format!("bad uniform chain size in {name:?}")))?;
                return MarkovChain::uniform_bernoulli(k).map_err(|e| invalid(e.to_string()));
            }
            if let Some(r) = name.strip_prefix("free_group:") {
                let r: usize = r
                    .parse()
                    .map_err(|_| invalid(format!("bad free-group rank in {name:?}")))?;
                if r == 0 {
                    return Err(invalid("free-group rank must be positive"));
                }
                return Ok(MarkovChain::uniform_free_group(r));
            }
            Err(invalid(format!("unknown chain {name:?}")))
        }
    }
}

/// Parses a dotted word like `"0.1.2"`; `"e"` (or an empty string) is the
/// root.
pub(crate) fn parse_word(text: &str) -> Result<Word, ConfigError> {
    let trimmed = text.trim();
    if trimmed.is_empty() || trimmed == "e" {
        return Ok(Word::empty());
    }
    let symbols = trimmed
        .split('.')
        .map(|part| {
            part.trim().parse::<Symbol>().map_err(|_| {
                invalid(format!("bad word {text:?}: {part:?} is not a symbol index"))
            })
        })
        .collect::<Result<Vec<Symbol>, _>>()?;
    Ok(Word::new(symbols))
}

/// Parses explicit tree word lists and checks every symbol against the
/// alphabet.
pub(crate) fn parse_explicit_trees(
    specs: &[Vec<String>],
    alphabet: &Alphabet,
) -> Result<Vec<RightRootedTree>, ConfigError> {
    specs
        .iter()
        .map(|words| {
            let parsed = words
                .iter()
                .map(|w| parse_word(w))
                .collect::<Result<Vec<Word>, _>>()?;
            for word in &parsed {
                for &s in word.symbols() {
                    if !alphabet.contains(s) {
                        return Err(invalid(format!(
                            "symbol {s} in tree word is outside the {}-symbol alphabet",
                            alphabet.size()
                        )));
                    }
                }
            }
            RightRootedTree::from_words(parsed).map_err(|e| invalid(format!("bad tree: {e}")))
        })
        .collect()
}

/// Chain names understood by Markov analysis, for the catalog listing.
#[must_use]
pub fn chain_names() -> Vec<&'static str> {
    vec![
        "finfty_chain",
        "two_state",
        "two_block",
        "uniform:<k>",
        "free_group:<r>",
    ]
}

/// Observable spec names, for the catalog listing.
#[must_use]
pub fn observable_names() -> Vec<&'static str> {
    vec![
        "auto",
        "indicator",
        "by_first_symbol",
        "constant",
        "identity",
        "base_cosine",
    ]
}
