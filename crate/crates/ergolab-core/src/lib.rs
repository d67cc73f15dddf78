//! Tree-indexed ergodic averaging over symbolic dynamical systems.
//!
//! This crate computes pointwise averages of observables along families of
//! preimage trees. The central objects are:
//!
//! * [`words`] — alphabets, finite words stored root-outward, and
//!   right-rooted (suffix-closed) trees of words;
//! * [`markov`] — finite and countable-row stochastic matrices, stationary
//!   distributions, cylinder measures, and return-time statistics;
//! * [`systems`] — symbolic systems (Bernoulli and Markov shifts, the
//!   continued-fraction map, group boundaries, skew products) presented
//!   through their weighted preimage branches;
//! * [`averaging`] — weighted tree averages, transfer-operator iteration,
//!   Cesàro means, and forward averages over group balls;
//! * [`tiling`] — greedy tiling of a preimage tree by smaller trees and the
//!   coverage statistics that quantify it;
//! * [`harness`] — a reproducible experiment runner with a TOML
//!   configuration format, CSV reports, and a command-line interface.
//!
//! Averages are weighted by products of one-step branch weights, so that
//! every level of a full preimage tree carries total weight one; the
//! numerical style throughout is compensated summation plus explicitly
//! seeded randomness, making every run reproducible bit for bit.

#![warn(missing_docs)]

pub mod averaging;
pub mod harness;
pub mod markov;
pub(crate) mod numeric;
pub mod systems;
pub mod tiling;
pub mod words;

pub use averaging::{
    AveragingError, AveragingReport, BranchPolicy, ForwardEvaluation, ReportRow, RowIndex,
    TreeEvaluation,
};
pub use harness::{ConfigError, ExperimentConfig, ExperimentKind, RunError, RunManifest};
pub use markov::{MarkovChain, MarkovError, ReturnTimeStats, StochasticMatrix};
pub use systems::{Observable, Point, PreimageBranch, PreimageSet, System, SystemError};
pub use tiling::{TileAssignment, TileRule, TilingError, TilingResult, TilingSweep};
pub use words::{Alphabet, RightRootedTree, Symbol, Word, WordError};
