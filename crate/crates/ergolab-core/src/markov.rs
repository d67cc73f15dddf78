//! Markov chains on symbol alphabets: stochastic matrices (finite, or
//! countable-state through closed-form row rules), stationary distributions,
//! cylinder measures, path sampling, and return-time statistics.
//!
//! A [`MarkovChain`] pairs a transition matrix with an initial distribution
//! and drives the measure on shift spaces used throughout the crate: the
//! probability of a finite word `w` is `π(w₀)·P(w₀,w₁)···P(w_{n−2},w_{n−1})`,
//! and one-step preimage weights of the shift are ratios of such cylinder
//! measures. Chains whose initial distribution is stationary (`πP = π`)
//! make the shift measure-preserving; [`MarkovChain::is_stationary`]
//! reports this, detected at construction from the residual `‖πP − π‖₁`.
//!
//! One countable-state chain is built in as a [`RowRuleKind`]: the
//! nearest-neighbour walk on the symmetric generators of an
//! infinite-rank free group, where each step is geometrically distributed
//! over the non-cancelling symbols. Its rows are sampled by exact
//! inverse-CDF evaluation, so no state-space truncation enters path
//! statistics, and [`survival_recurrence`] provides the closed-form
//! return-time law used to cross-check the Monte Carlo output.

use nalgebra::{DMatrix, DVector};
use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::words::{Symbol, Word};

/// Maximum allowed deviation of a finite row (or an initial vector) from
/// total mass one.
const ROW_SUM_TOL: f64 = 1e-12;
/// A chain is flagged stationary when `‖πP − π‖₁` is at most this.
const STATIONARY_RESIDUAL_TOL: f64 = 1e-10;
/// Power-iteration convergence tolerance and iteration cap.
const POWER_TOL: f64 = 1e-12;
const POWER_CAP: usize = 1_000_000;
/// Number of survival probabilities `ℙ[τ ≥ k]` estimated per return-time run.
const SURVIVAL_K_MAX: usize = 10;
/// Default censoring horizon for return-time simulation.
pub const DEFAULT_RETURN_HORIZON: usize = 10_000;

/// Errors from chain construction and analysis.
#[derive(Debug, Error, PartialEq)]
pub enum MarkovError {
    /// A matrix or distribution failed validation.
    #[error("invalid stochastic data: {0}")]
    InvalidMatrix(String),
    /// The matrix admits more than one closed communicating class, so the
    /// stationary distribution is not unique.
    #[error("stationary distribution is not unique (multiple closed classes)")]
    AmbiguousStationary,
    /// Neither the direct linear solve nor power iteration produced a
    /// stationary vector within tolerance.
    #[error("stationary solve did not converge")]
    StationarySolveFailed,
    /// Every simulated excursion was censored at the horizon.
    #[error("no return to state {state} observed within {horizon} steps")]
    NoReturnObserved {
        /// The start state.
        state: Symbol,
        /// The censoring horizon that was exhausted.
        horizon: usize,
    },
}

/// The registered closed-form row rules for countable-state matrices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowRuleKind {
    /// Nearest-neighbour walk on the symmetric generators of the
    /// infinite-rank free group: from state `s`, the next symbol `j` has
    /// probability `2^{−(j+1)}` for `j` below the inverse of `s`, zero at
    /// the inverse, and `2^{−j}` above it. Each row sums to one exactly.
    FinftyChain,
}

impl RowRuleKind {
    /// Registered config name of the rule.
    #[must_use]
    pub fn name(self) -> &'static str {
        match self {
            RowRuleKind::FinftyChain => "finfty_chain",
        }
    }

    /// Looks a rule up by registered name.
    #[must_use]
    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            "finfty_chain" => Some(RowRuleKind::FinftyChain),
            _ => None,
        }
    }

    fn entry(self, i: Symbol, j: Symbol) -> f64 {
        match self {
            RowRuleKind::FinftyChain => {
                let t = i ^ 1;
                if j == t {
                    0.0
                } else if j < t {
                    0.5f64.powi(j as i32 + 1)
                } else {
                    0.5f64.powi(j as i32)
                }
            }
        }
    }

    /// Row CDF up to and including column `j`.
    fn row_cdf(self, i: Symbol, j: Symbol) -> f64 {
        match self {
            RowRuleKind::FinftyChain => {
                let t = i ^ 1;
                if j < t {
                    1.0 - 0.5f64.powi(j as i32 + 1)
                } else {
                    1.0 - 0.5f64.powi(j as i32)
                }
            }
        }
    }
}

/// A row-stochastic transition matrix.
#[derive(Debug, Clone, PartialEq)]
pub enum StochasticMatrix {
    /// Dense matrix over `rows.len()` states.
    Finite {
        /// Row-major entries; each row sums to one.
        rows: Vec<Vec<f64>>,
    },
    /// Countable-state matrix given by a closed-form row rule.
    RowRule {
        /// The registered rule.
        rule: RowRuleKind,
    },
}

impl StochasticMatrix {
    /// Validates and wraps a dense matrix: square, entries non-negative,
    /// every row summing to one within `1e−12`.
    pub fn finite(rows: Vec<Vec<f64>>) -> Result<Self, MarkovError> {
        let n = rows.len();
        if n == 0 {
            return Err(MarkovError::InvalidMatrix("empty matrix".into()));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(MarkovError::InvalidMatrix(format!(
                    "row {i} has {} entries, expected {n}",
                    row.len()
                )));
            }
            if row.iter().any(|&p| p < 0.0 || !p.is_finite()) {
                return Err(MarkovError::InvalidMatrix(format!(
                    "row {i} has a negative or non-finite entry"
                )));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(MarkovError::InvalidMatrix(format!(
                    "row {i} sums to {sum}, not 1"
                )));
            }
        }
        Ok(StochasticMatrix::Finite { rows })
    }

    /// The built-in countable-state walk ([`RowRuleKind::FinftyChain`]).
    #[must_use]
    pub fn finfty_rule() -> Self {
        StochasticMatrix::RowRule {
            rule: RowRuleKind::FinftyChain,
        }
    }

    /// Number of states, or `None` when countable.
    #[must_use]
    pub fn state_count(&self) -> Option<usize> {
        match self {
            StochasticMatrix::Finite { rows } => Some(rows.len()),
            StochasticMatrix::RowRule { .. } => None,
        }
    }

    /// Transition probability `P(i, j)`.
    ///
    /// # Panics
    /// Panics if a state index is out of range for a finite matrix.
    #[must_use]
    pub fn entry(&self, i: Symbol, j: Symbol) -> f64 {
        match self {
            StochasticMatrix::Finite { rows } => rows[i as usize][j as usize],
            StochasticMatrix::RowRule { rule } => rule.entry(i, j),
        }
    }

    /// Whether the positive-entry directed graph is strongly connected.
    /// Row-rule matrices are irreducible by construction.
    #[must_use]
    pub fn is_irreducible(&self) -> bool {
        match self {
            StochasticMatrix::Finite { rows } => {
                strongly_connected_components(rows).len() == 1
            }
            StochasticMatrix::RowRule { .. } => true,
        }
    }

    /// The unique stationary distribution `π` with `πP = π`, `Σπ = 1`.
    ///
    /// Solves the fixed-point linear system directly (one equation replaced
    /// by the normalization), falling back to damped power iteration; the
    /// result is validated to residual `‖πP − π‖₁ ≤ 1e−10`.
    ///
    /// # Errors
    /// [`MarkovError::AmbiguousStationary`] when the matrix has two or more
    /// closed communicating classes (the stationary vector is then not
    /// unique); [`MarkovError::InvalidMatrix`] for row-rule matrices, whose
    /// stationary masses are obtained through return times instead.
    pub fn stationary_distribution(&self) -> Result<Vec<f64>, MarkovError> {
        let rows = match self {
            StochasticMatrix::Finite { rows } => rows,
            StochasticMatrix::RowRule { .. } => {
                return Err(MarkovError::InvalidMatrix(
                    "stationary solve requires a finite matrix; \
                     use return times for row-rule chains"
                        .into(),
                ))
            }
        };
        if count_closed_classes(rows) >= 2 {
            return Err(MarkovError::AmbiguousStationary);
        }
        if let Some(pi) = stationary_by_lu(rows) {
            return Ok(pi);
        }
        stationary_by_power_iteration(rows).ok_or(MarkovError::StationarySolveFailed)
    }
}

fn strongly_connected_components(rows: &[Vec<f64>]) -> Vec<Vec<usize>> {
    let n = rows.len();
    let mut g = DiGraph::<(), ()>::with_capacity(n, n * n);
    let nodes: Vec<_> = (0..n).map(|_| g.add_node(())).collect();
    for (i, row) in rows.iter().enumerate() {
        for (j, &p) in row.iter().enumerate() {
            if i != j && p > 0.0 {
                g.add_edge(nodes[i], nodes[j], ());
            }
        }
    }
    tarjan_scc(&g)
        .into_iter()
        .map(|scc| scc.into_iter().map(|ix| ix.index()).collect())
        .collect()
}

/// Number of communicating classes with no transition leaving them.
fn count_closed_classes(rows: &[Vec<f64>]) -> usize {
    let sccs = strongly_connected_components(rows);
    let mut class_of = vec![0usize; rows.len()];
    for (c, scc) in sccs.iter().enumerate() {
        for &i in scc {
            class_of[i] = c;
        }
    }
    let mut closed = vec![true; sccs.len()];
    for (i, row) in rows.iter().enumerate() {
        for (j, &p) in row.iter().enumerate() {
            if p > 0.0 && class_of[i] != class_of[j] {
                closed[class_of[i]] = false;
            }
        }
    }
    closed.iter().filter(|&&c| c).count()
}

fn residual_l1(rows: &[Vec<f64>], pi: &[f64]) -> f64 {
    let n = rows.len();
    (0..n)
        .map(|j| {
            let image: f64 = (0..n).map(|i| pi[i] * rows[i][j]).sum();
            (image - pi[j]).abs()
        })
        .sum()
}

fn clean_distribution(mut pi: Vec<f64>) -> Option<Vec<f64>> {
    for p in &mut pi {
        if !p.is_finite() {
            return None;
        }
        if *p < 0.0 {
            if *p < -1e-9 {
                return None;
            }
            *p = 0.0;
        }
    }
    let total: f64 = pi.iter().sum();
    if total <= 0.0 {
        return None;
    }
    for p in &mut pi {
        *p /= total;
    }
    Some(pi)
}

fn stationary_by_lu(rows: &[Vec<f64>]) -> Option<Vec<f64>> {
    let n = rows.len();
    // (Pᵀ − I)π = 0 with the last equation replaced by Σπ = 1.
    let mut a = DMatrix::<f64>::zeros(n, n);
    for (i, row) in rows.iter().enumerate() {
        for (j, &p) in row.iter().enumerate() {
            a[(j, i)] = p;
        }
    }
    for i in 0..n {
        a[(i, i)] -= 1.0;
    }
    for j in 0..n {
        a[(n - 1, j)] = 1.0;
    }
    let mut b = DVector::<f64>::zeros(n);
    b[n - 1] = 1.0;
    let sol = a.lu().solve(&b)?;
    let pi = clean_distribution(sol.iter().copied().collect())?;
    (residual_l1(rows, &pi) <= STATIONARY_RESIDUAL_TOL).then_some(pi)
}

fn stationary_by_power_iteration(rows: &[Vec<f64>]) -> Option<Vec<f64>> {
    let n = rows.len();
    // Iterate the lazy matrix (P + I)/2: same stationary vector, aperiodic.
    let mut pi = vec![1.0 / n as f64; n];
    for _ in 0..POWER_CAP {
        let mut next = vec![0.0; n];
        for (i, row) in rows.iter().enumerate() {
            for (j, &p) in row.iter().enumerate() {
                next[j] += pi[i] * p;
            }
        }
        let mut delta = 0.0;
        for j in 0..n {
            next[j] = 0.5 * (next[j] + pi[j]);
            delta += (next[j] - pi[j]).abs();
        }
        pi = next;
        if delta <= POWER_TOL {
            break;
        }
    }
    let pi = clean_distribution(pi)?;
    (residual_l1(rows, &pi) <= STATIONARY_RESIDUAL_TOL).then_some(pi)
}

/// The initial distribution of a chain.
#[derive(Debug, Clone, PartialEq)]
enum Initial {
    Finite(Vec<f64>),
    /// `π(j) = 2^{−(j+1)}` over all states `j ≥ 0`.
    Geometric,
}

/// A transition matrix together with an initial distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovChain {
    matrix: StochasticMatrix,
    initial: Initial,
    stationary: bool,
}

impl MarkovChain {
    /// A chain from a finite matrix and an explicit initial distribution
    /// (all entries positive, summing to one within `1e−12`). The chain is
    /// flagged stationary automatically when `‖πP − π‖₁ ≤ 1e−10`.
    pub fn new(matrix: StochasticMatrix, initial: Vec<f64>) -> Result<Self, MarkovError> {
        let rows = match &matrix {
            StochasticMatrix::Finite { rows } => rows,
            StochasticMatrix::RowRule { .. } => {
                return Err(MarkovError::InvalidMatrix(
                    "row-rule chains carry their own initial distribution".into(),
                ))
            }
        };
        if initial.len() != rows.len() {
            return Err(MarkovError::InvalidMatrix(format!(
                "initial distribution has {} entries for {} states",
                initial.len(),
                rows.len()
            )));
        }
        if initial.iter().any(|&p| p <= 0.0 || !p.is_finite()) {
            return Err(MarkovError::InvalidMatrix(
                "initial distribution entries must be positive".into(),
            ));
        }
        let sum: f64 = initial.iter().sum();
        if (sum - 1.0).abs() > ROW_SUM_TOL {
            return Err(MarkovError::InvalidMatrix(format!(
                "initial distribution sums to {sum}, not 1"
            )));
        }
        let stationary = residual_l1(rows, &initial) <= STATIONARY_RESIDUAL_TOL;
        Ok(Self {
            matrix,
            initial: Initial::Finite(initial),
            stationary,
        })
    }

    /// A chain started from the stationary distribution of `matrix`.
    pub fn stationary(matrix: StochasticMatrix) -> Result<Self, MarkovError> {
        let pi = matrix.stationary_distribution()?;
        Self::new(matrix, pi)
    }

    /// The built-in countable-state walk with its geometric initial
    /// distribution `π(j) = 2^{−(j+1)}` (not stationary; stationary masses
    /// come from return times via [`MarkovChain::expected_return_time`]).
    #[must_use]
    pub fn finfty_chain() -> Self {
        Self {
            matrix: StochasticMatrix::finfty_rule(),
            initial: Initial::Geometric,
            stationary: false,
        }
    }

    /// The uniform chain on `k` symbols: independent uniform draws.
    pub fn uniform_bernoulli(k: usize) -> Result<Self, MarkovError> {
        let rows = vec![vec![1.0 / k as f64; k]; k];
        Self::new(StochasticMatrix::finite(rows)?, vec![1.0 / k as f64; k])
    }

    /// A small asymmetric two-state chain with stationary distribution
    /// `(0.8, 0.2)`.
    #[must_use]
    pub fn two_state() -> Self {
        let m = StochasticMatrix::finite(vec![vec![0.9, 0.1], vec![0.4, 0.6]])
            .expect("constant matrix is valid");
        Self::new(m, vec![0.8, 0.2]).expect("constant chain is valid")
    }

    /// The uniform non-cancelling walk on the `2·rank` symmetric generators
    /// of a free group: from any symbol, the next is uniform over the
    /// `2·rank − 1` symbols other than its inverse, and the initial
    /// distribution is uniform (which is stationary).
    ///
    /// # Panics
    /// Panics if `rank` is zero.
    #[must_use]
    pub fn uniform_free_group(rank: usize) -> Self {
        assert!(rank > 0, "free group rank must be positive");
        let n = 2 * rank;
        let p = 1.0 / (n - 1) as f64;
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| if j == i ^ 1 { 0.0 } else { p }).collect())
            .collect();
        let m = StochasticMatrix::finite(rows).expect("constant matrix is valid");
        Self::new(m, vec![1.0 / n as f64; n]).expect("constant chain is valid")
    }

    /// A four-state chain made of two symmetric two-state blocks with no
    /// transitions between them; the uniform initial distribution is
    /// stationary, but the chain is reducible, so averages converge to
    /// per-block means rather than a global constant.
    #[must_use]
    pub fn two_block() -> Self {
        let rows = vec![
            vec![0.6, 0.4, 0.0, 0.0],
            vec![0.4, 0.6, 0.0, 0.0],
            vec![0.0, 0.0, 0.65, 0.35],
            vec![0.0, 0.0, 0.35, 0.65],
        ];
        let m = StochasticMatrix::finite(rows).expect("constant matrix is valid");
        Self::new(m, vec![0.25; 4]).expect("constant chain is valid")
    }

    /// The transition matrix.
    #[must_use]
    pub fn matrix(&self) -> &StochasticMatrix {
        &self.matrix
    }

    /// Number of states, or `None` when countable.
    #[must_use]
    pub fn state_count(&self) -> Option<usize> {
        self.matrix.state_count()
    }

    /// Initial probability `π(i)`.
    #[must_use]
    pub fn initial_probability(&self, i: Symbol) -> f64 {
        match &self.initial {
            Initial::Finite(pi) => pi.get(i as usize).copied().unwrap_or(0.0),
            Initial::Geometric => 0.5f64.powi(i as i32 + 1),
        }
    }

    /// Transition probability `P(i, j)`.
    #[must_use]
    pub fn transition(&self, i: Symbol, j: Symbol) -> f64 {
        self.matrix.entry(i, j)
    }

    /// Whether the initial distribution is stationary (`‖πP − π‖₁ ≤ 1e−10`),
    /// so the shift driven by this chain preserves its measure.
    #[must_use]
    pub fn is_stationary(&self) -> bool {
        self.stationary
    }

    fn check_word(&self, w: &Word) {
        if let Some(n) = self.state_count() {
            assert!(
                w.symbols().iter().all(|&s| (s as usize) < n),
                "word {w} uses symbols outside the chain's {n}-state alphabet"
            );
        }
    }

    /// Probability of the cylinder of words starting with `w`:
    /// `ℙ[w] = π(w₀)·P(w₀,w₁)···P(w_{n−2},w_{n−1})`, with `ℙ[∅] = 1`.
    ///
    /// # Panics
    /// Panics if `w` uses symbols outside the chain's alphabet.
    #[must_use]
    pub fn cylinder_measure(&self, w: &Word) -> f64 {
        self.check_word(w);
        match w.outer_symbol() {
            None => 1.0,
            Some(first) => self.initial_probability(first) * self.conditional_cylinder(w),
        }
    }

    /// Conditional cylinder probability `ℙ_{w₀}[w]`: the product of the
    /// transition probabilities along `w`, with no initial factor. Equals 1
    /// for words of length ≤ 1.
    ///
    /// # Panics
    /// Panics if `w` uses symbols outside the chain's alphabet.
    #[must_use]
    pub fn conditional_cylinder(&self, w: &Word) -> f64 {
        self.check_word(w);
        w.symbols()
            .windows(2)
            .map(|pair| self.transition(pair[0], pair[1]))
            .product()
    }

    /// Draws a symbol from the initial distribution by inverse CDF.
    pub fn sample_initial<R: Rng + ?Sized>(&self, rng: &mut R) -> Symbol {
        let u: f64 = rng.gen();
        match &self.initial {
            Initial::Finite(pi) => sample_finite_row(pi, u),
            Initial::Geometric => {
                let mut j: Symbol = 0;
                // Smallest j with u < 1 − 2^{−(j+1)}; terminates since u < 1.
                while u >= 1.0 - 0.5f64.powi(j as i32 + 1) {
                    j += 1;
                }
                j
            }
        }
    }

    /// Draws the successor of `from` by inverse CDF on row `from`. Exact for
    /// row-rule chains: the closed-form CDF is evaluated per column, so no
    /// truncation of the countable state space occurs.
    pub fn sample_step<R: Rng + ?Sized>(&self, from: Symbol, rng: &mut R) -> Symbol {
        let u: f64 = rng.gen();
        match &self.matrix {
            StochasticMatrix::Finite { rows } => sample_finite_row(&rows[from as usize], u),
            StochasticMatrix::RowRule { rule } => {
                let mut j: Symbol = 0;
                // The CDF is flat across the zero entry at the inverse of
                // `from`, so the scan can never land there.
                while u >= rule.row_cdf(from, j) {
                    j += 1;
                }
                j
            }
        }
    }

    /// Samples a word of the given length: first symbol from the initial
    /// distribution, successors from the matrix rows. Deterministic in
    /// `seed`.
    ///
    /// # Panics
    /// Panics if `length` is zero.
    #[must_use]
    pub fn sample_path(&self, length: usize, seed: u64) -> Word {
        assert!(length >= 1, "a sampled path has at least one symbol");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.sample_path_with(length, &mut rng)
    }

    /// As [`MarkovChain::sample_path`], drawing from a caller-provided
    /// generator.
    pub fn sample_path_with<R: Rng + ?Sized>(&self, length: usize, rng: &mut R) -> Word {
        let mut symbols = Vec::with_capacity(length);
        let mut s = self.sample_initial(rng);
        symbols.push(s);
        for _ in 1..length {
            s = self.sample_step(s, rng);
            symbols.push(s);
        }
        Word::new(symbols)
    }

    /// Monte Carlo estimate of the expected first-return time to `state`,
    /// simulating `sample_count` excursions started at `state` and censored
    /// at `max_horizon` steps (censored excursions contribute the horizon
    /// and are counted in [`ReturnTimeStats::censored`]).
    ///
    /// # Errors
    /// [`MarkovError::NoReturnObserved`] when every excursion was censored.
    ///
    /// # Panics
    /// Panics if `sample_count` is zero or `max_horizon` is zero.
    pub fn expected_return_time(
        &self,
        state: Symbol,
        max_horizon: usize,
        sample_count: usize,
        seed: u64,
    ) -> Result<ReturnTimeStats, MarkovError> {
        assert!(sample_count >= 1, "need at least one excursion");
        assert!(max_horizon >= 1, "horizon must be positive");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        let mut censored = 0usize;
        let mut at_least = [0u64; SURVIVAL_K_MAX];
        for _ in 0..sample_count {
            let mut tau = 0usize;
            let mut here = state;
            loop {
                here = self.sample_step(here, &mut rng);
                tau += 1;
                if here == state || tau == max_horizon {
                    break;
                }
            }
            if here != state {
                censored += 1;
            }
            let t = tau as f64;
            sum += t;
            sum_sq += t * t;
            for (k_minus_1, slot) in at_least.iter_mut().enumerate() {
                if tau > k_minus_1 {
                    *slot += 1;
                }
            }
        }
        if censored == sample_count {
            return Err(MarkovError::NoReturnObserved {
                state,
                horizon: max_horizon,
            });
        }
        let n = sample_count as f64;
        let mean = sum / n;
        let variance = (sum_sq / n - mean * mean).max(0.0);
        let std_error = if sample_count > 1 {
            (variance / (n - 1.0)).sqrt()
        } else {
            f64::INFINITY
        };
        let survival = at_least.iter().map(|&c| c as f64 / n).collect();
        Ok(ReturnTimeStats {
            state,
            samples: sample_count,
            mean_return: mean,
            mean_std_error: std_error,
            survival,
            censored,
        })
    }
}

/// Inverse-CDF draw from a finite probability row.
fn sample_finite_row(row: &[f64], u: f64) -> Symbol {
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (j, &p) in row.iter().enumerate() {
        if p > 0.0 {
            acc += p;
            last_positive = j;
            if u < acc {
                return j as Symbol;
            }
        }
    }
    // Rounding pushed the partial sums below u; return the last admissible
    // symbol.
    last_positive as Symbol
}

/// Summary of simulated first-return times to a state.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnTimeStats {
    /// The state returned to.
    pub state: Symbol,
    /// Number of simulated excursions.
    pub samples: usize,
    /// Sample mean of the return time (censored excursions contribute the
    /// horizon).
    pub mean_return: f64,
    /// Standard error of the mean.
    pub mean_std_error: f64,
    /// `survival[k−1]` estimates `ℙ[τ ≥ k]` for `k = 1..=10`.
    pub survival: Vec<f64>,
    /// Number of excursions that never returned within the horizon.
    pub censored: usize,
}

impl ReturnTimeStats {
    /// Estimated `ℙ[τ ≥ k]` (1-based `k`), or `None` beyond the recorded
    /// range.
    #[must_use]
    pub fn survival_at(&self, k: usize) -> Option<f64> {
        if k == 0 {
            return None;
        }
        self.survival.get(k - 1).copied()
    }

    /// Fraction of excursions censored at the horizon.
    #[must_use]
    pub fn censored_fraction(&self) -> f64 {
        self.censored as f64 / self.samples as f64
    }
}

/// Closed-form return-time law of the built-in countable-state walk,
/// started at symbol 0.
///
/// `q(k)` and `r(k)` split the probability of surviving `k` steps by
/// whether the walk currently sits adjacent to its target or deeper;
/// `p(k) = ℙ[τ ≥ k]` with `p(1) = 1` and `p(k+1) = q(k) + r(k)`. The
/// recurrences are `q₁ = 0`, `r₁ = 1/2`, and both update through
/// `x_k = q_{k−1}/2 + r_{k−1}/4`, which collapses to
/// `q_k = r_k = (3/4)^{k−2}/8` for `k ≥ 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct SurvivalRecurrence {
    q: Vec<f64>,
    r: Vec<f64>,
    p: Vec<f64>,
}

impl SurvivalRecurrence {
    /// `q_k` for `1 ≤ k ≤ k_max`.
    ///
    /// # Panics
    /// Panics if `k` is out of range.
    #[must_use]
    pub fn q(&self, k: usize) -> f64 {
        self.q[k - 1]
    }

    /// `r_k` for `1 ≤ k ≤ k_max`.
    ///
    /// # Panics
    /// Panics if `k` is out of range.
    #[must_use]
    pub fn r(&self, k: usize) -> f64 {
        self.r[k - 1]
    }

    /// Survival probability `p_k = ℙ[τ ≥ k]` for `1 ≤ k ≤ k_max + 1`.
    ///
    /// # Panics
    /// Panics if `k` is out of range.
    #[must_use]
    pub fn p(&self, k: usize) -> f64 {
        self.p[k - 1]
    }

    /// Number of recurrence steps taken.
    #[must_use]
    pub fn k_max(&self) -> usize {
        self.q.len()
    }

    /// Expected return time `Σ_k p_k`, summed exactly using the geometric
    /// tail `p_{k+1} = (3/4)·p_k` beyond the computed range. Evaluates to
    /// `5/2`.
    ///
    /// # Panics
    /// Panics if fewer than two recurrence steps were computed.
    #[must_use]
    pub fn mean_return(&self) -> f64 {
        let kk = self.p.len(); // == k_max + 1 ≥ 3
        assert!(kk >= 3, "need k_max ≥ 2 for the geometric tail");
        let partial: f64 = self.p.iter().sum();
        partial + 3.0 * self.p[kk - 1]
    }
}

/// Runs the closed-form survival recurrence for `k_max` steps.
///
/// # Panics
/// Panics if `k_max` is zero.
#[must_use]
pub fn survival_recurrence(k_max: usize) -> SurvivalRecurrence {
    assert!(k_max >= 1, "need at least one recurrence step");
    let mut q = Vec::with_capacity(k_max);
    let mut r = Vec::with_capacity(k_max);
    let mut p = Vec::with_capacity(k_max + 1);
    q.push(0.0);
    r.push(0.5);
    p.push(1.0);
    for k in 1..k_max {
        let next = 0.5 * q[k - 1] + 0.25 * r[k - 1];
        q.push(next);
        r.push(next);
    }
    for k in 0..k_max {
        p.push(q[k] + r[k]);
    }
    SurvivalRecurrence { q, r, p }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::words::Alphabet;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn finite_matrix_validation_rejects_bad_rows() {
        assert!(matches!(
            StochasticMatrix::finite(vec![vec![0.5, 0.4], vec![0.5, 0.5]]),
            Err(MarkovError::InvalidMatrix(_))
        ));
        assert!(matches!(
            StochasticMatrix::finite(vec![vec![1.5, -0.5], vec![0.5, 0.5]]),
            Err(MarkovError::InvalidMatrix(_))
        ));
        assert!(matches!(
            StochasticMatrix::finite(vec![vec![1.0, 0.0]]),
            Err(MarkovError::InvalidMatrix(_))
        ));
        assert!(StochasticMatrix::finite(vec![vec![0.5, 0.5], vec![0.25, 0.75]]).is_ok());
    }

    #[test]
    fn stationary_solve_matches_hand_computation() {
        let m = StochasticMatrix::finite(vec![vec![0.9, 0.1], vec![0.4, 0.6]]).unwrap();
        let pi = m.stationary_distribution().unwrap();
        assert!(close(pi[0], 0.8, 1e-12));
        assert!(close(pi[1], 0.2, 1e-12));
    }

    #[test]
    fn uniform_matrix_has_uniform_stationary_vector() {
        for n in [2usize, 3, 5] {
            let rows = vec![vec![1.0 / n as f64; n]; n];
            let m = StochasticMatrix::finite(rows).unwrap();
            let pi = m.stationary_distribution().unwrap();
            for p in pi {
                assert!(close(p, 1.0 / n as f64, 1e-12));
            }
        }
    }

    #[test]
    fn free_group_walk_has_uniform_stationary_vector() {
        let chain = MarkovChain::uniform_free_group(2);
        let pi = chain.matrix().stationary_distribution().unwrap();
        for p in &pi {
            assert!(close(*p, 0.25, 1e-12));
        }
        // Residual of the constructed initial distribution.
        assert!(chain.is_stationary());
        assert_eq!(chain.transition(0, 1), 0.0);
        assert!(close(chain.transition(0, 0), 1.0 / 3.0, 1e-15));
    }

    #[test]
    fn multiple_closed_classes_are_ambiguous() {
        let m = StochasticMatrix::finite(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(
            m.stationary_distribution(),
            Err(MarkovError::AmbiguousStationary)
        );
        assert_eq!(
            MarkovChain::two_block().matrix().stationary_distribution(),
            Err(MarkovError::AmbiguousStationary)
        );
    }

    #[test]
    fn reducible_with_unique_closed_class_still_solves() {
        // State 0 is transient; all stationary mass sits on state 1.
        let m = StochasticMatrix::finite(vec![vec![0.5, 0.5], vec![0.0, 1.0]]).unwrap();
        let pi = m.stationary_distribution().unwrap();
        assert!(close(pi[0], 0.0, 1e-12));
        assert!(close(pi[1], 1.0, 1e-12));
    }

    #[test]
    fn periodic_chain_falls_back_gracefully() {
        // Two-cycle: LU path already works, but the answer must be exact
        // either way.
        let m = StochasticMatrix::finite(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let pi = m.stationary_distribution().unwrap();
        assert!(close(pi[0], 0.5, 1e-10));
        assert!(close(pi[1], 0.5, 1e-10));
    }

    #[test]
    fn irreducibility_matches_graph_structure() {
        let two = StochasticMatrix::finite(vec![vec![0.9, 0.1], vec![0.4, 0.6]]).unwrap();
        assert!(two.is_irreducible());
        let blocks = StochasticMatrix::finite(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert!(!blocks.is_irreducible());
        assert!(MarkovChain::uniform_free_group(2).matrix().is_irreducible());
        assert!(StochasticMatrix::finfty_rule().is_irreducible());
    }

    #[test]
    fn cylinder_measures_match_hand_products() {
        let uniform = MarkovChain::uniform_bernoulli(2).unwrap();
        assert!(close(
            uniform.cylinder_measure(&Word::new(vec![0, 1])),
            0.25,
            1e-15
        ));
        let chain = MarkovChain::two_state();
        assert!(close(
            chain.cylinder_measure(&Word::new(vec![0, 0, 1])),
            0.072,
            1e-15
        ));
        assert_eq!(chain.cylinder_measure(&Word::empty()), 1.0);
    }

    #[test]
    fn cylinder_measure_factorizes_over_first_step() {
        // ℙ[i⌢j⌢w] = π(i)/π(j) · P(i,j) · ℙ[j⌢w], exhaustively for all
        // words of length ≤ 6 over the two-state chain.
        let chain = MarkovChain::two_state();
        for len in 2..=6usize {
            for code in 0..(1u32 << len) {
                let symbols: Vec<Symbol> = (0..len).map(|b| (code >> b) & 1).collect();
                let w = Word::new(symbols.clone());
                let suffix = Word::new(symbols[1..].to_vec());
                let i = symbols[0];
                let j = symbols[1];
                let lhs = chain.cylinder_measure(&w);
                let rhs = chain.initial_probability(i) / chain.initial_probability(j)
                    * chain.transition(i, j)
                    * chain.cylinder_measure(&suffix);
                assert!(close(lhs, rhs, 1e-15), "failed for {w}");
            }
        }
    }

    #[test]
    fn finfty_rows_sum_to_one_analytically() {
        let rule = RowRuleKind::FinftyChain;
        for s in 0..7u32 {
            let partial: f64 = (0..=40u32).map(|j| rule.entry(s, j)).sum();
            assert!(partial >= 1.0 - 1e-9, "state {s} partial sum {partial}");
            assert_eq!(rule.entry(s, s ^ 1), 0.0);
        }
    }

    #[test]
    fn finfty_row_cdf_is_consistent_with_entries() {
        let rule = RowRuleKind::FinftyChain;
        for s in 0..5u32 {
            let mut acc = 0.0;
            for j in 0..20u32 {
                acc += rule.entry(s, j);
                assert!(close(acc, rule.row_cdf(s, j), 1e-15));
            }
        }
    }

    #[test]
    fn sampled_paths_are_reproducible_and_respect_zero_entries() {
        let chain = MarkovChain::finfty_chain();
        let w1 = chain.sample_path(10, 7);
        let w2 = chain.sample_path(10, 7);
        assert_eq!(w1, w2);
        assert_eq!(w1.len(), 10);
        // No symbol is followed by its inverse (those transitions have
        // probability zero), i.e. the path is a reduced word.
        let big = Alphabet::free_group(512);
        assert!(w1.is_reduced(&big));
        for seed in 0..200 {
            assert!(chain.sample_path(20, seed).is_reduced(&big));
        }
    }

    #[test]
    fn initial_sampling_frequencies_match_the_distribution() {
        let chain = MarkovChain::two_state();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let n = 100_000;
        let mut count0 = 0u32;
        for _ in 0..n {
            if chain.sample_initial(&mut rng) == 0 {
                count0 += 1;
            }
        }
        let freq = f64::from(count0) / f64::from(n);
        let se = (0.8 * 0.2 / f64::from(n)).sqrt();
        assert!(
            (freq - 0.8).abs() <= 3.0 * se,
            "frequency {freq} too far from 0.8"
        );
    }

    #[test]
    fn geometric_initial_sampling_matches_closed_form() {
        let chain = MarkovChain::finfty_chain();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 100_000;
        let mut counts = [0u32; 4];
        for _ in 0..n {
            let s = chain.sample_initial(&mut rng);
            if (s as usize) < counts.len() {
                counts[s as usize] += 1;
            }
        }
        for (j, &c) in counts.iter().enumerate() {
            let p = 0.5f64.powi(j as i32 + 1);
            let freq = f64::from(c) / f64::from(n);
            let se = (p * (1.0 - p) / f64::from(n)).sqrt();
            assert!(
                (freq - p).abs() <= 4.0 * se,
                "symbol {j}: frequency {freq} vs {p}"
            );
        }
    }

    #[test]
    fn return_times_invert_the_stationary_distribution() {
        let chain = MarkovChain::two_state();
        let stats = chain
            .expected_return_time(0, DEFAULT_RETURN_HORIZON, 40_000, 11)
            .unwrap();
        assert!(
            (stats.mean_return - 1.25).abs() <= 3.0 * stats.mean_std_error,
            "mean {} ± {}",
            stats.mean_return,
            stats.mean_std_error
        );
        assert_eq!(stats.censored, 0);
        assert_eq!(stats.survival_at(1), Some(1.0));
        for k in 1..stats.survival.len() {
            assert!(stats.survival[k] <= stats.survival[k - 1]);
        }
    }

    #[test]
    fn uniform_two_state_returns_in_two_steps_on_average() {
        let chain = MarkovChain::uniform_bernoulli(2).unwrap();
        let stats = chain
            .expected_return_time(0, DEFAULT_RETURN_HORIZON, 40_000, 3)
            .unwrap();
        assert!((stats.mean_return - 2.0).abs() <= 3.0 * stats.mean_std_error);
    }

    #[test]
    fn no_return_is_reported_when_horizon_censors_everything() {
        // From state 0 the chain moves to the absorbing state 1 and stays.
        let m = StochasticMatrix::finite(vec![vec![0.0, 1.0], vec![0.0, 1.0]]).unwrap();
        let chain = MarkovChain::new(m, vec![0.5, 0.5]).unwrap();
        assert_eq!(
            chain.expected_return_time(0, 50, 100, 1),
            Err(MarkovError::NoReturnObserved {
                state: 0,
                horizon: 50
            })
        );
    }

    #[test]
    fn survival_recurrence_matches_closed_forms() {
        let rec = survival_recurrence(10);
        assert_eq!(rec.q(1), 0.0);
        assert_eq!(rec.r(1), 0.5);
        assert_eq!(rec.p(1), 1.0);
        assert_eq!(rec.p(2), 0.5);
        assert!(close(rec.q(2), 0.125, 1e-15));
        assert!(close(rec.r(2), 0.125, 1e-15));
        assert!(close(rec.p(3), 0.25, 1e-15));
        let c = 0.75f64.powi(3);
        assert!(close(rec.q(5), c / 8.0, 1e-15));
        assert!(close(rec.p(6), c / 4.0, 1e-15));
        for k in 2..=10 {
            assert!(close(rec.q(k), 0.75f64.powi(k as i32 - 2) / 8.0, 1e-15));
        }
        assert!(close(rec.mean_return(), 2.5, 1e-12));
    }

    #[test]
    fn monte_carlo_survival_tracks_the_recurrence() {
        let chain = MarkovChain::finfty_chain();
        let n = 30_000;
        let stats = chain
            .expected_return_time(0, DEFAULT_RETURN_HORIZON, n, 17)
            .unwrap();
        let rec = survival_recurrence(12);
        for k in 1..=8 {
            let p = rec.p(k);
            let se = (p * (1.0 - p) / n as f64).sqrt();
            let observed = stats.survival_at(k).unwrap();
            assert!(
                (observed - p).abs() <= 3.5 * se + 1e-12,
                "k={k}: observed {observed} vs {p}"
            );
        }
        assert!((stats.mean_return - 2.5).abs() <= 3.0 * stats.mean_std_error);
        assert!(stats.censored_fraction() < 1e-3);
    }

    #[test]
    fn stationarity_flag_follows_the_residual() {
        assert!(MarkovChain::two_state().is_stationary());
        assert!(MarkovChain::two_block().is_stationary());
        assert!(!MarkovChain::finfty_chain().is_stationary());
        let m = StochasticMatrix::finite(vec![vec![0.9, 0.1], vec![0.4, 0.6]]).unwrap();
        let skewed = MarkovChain::new(m, vec![0.5, 0.5]).unwrap();
        assert!(!skewed.is_stationary());
    }

    #[test]
    fn row_rule_lookup_by_name() {
        assert_eq!(
            RowRuleKind::by_name("finfty_chain"),
            Some(RowRuleKind::FinftyChain)
        );
        assert_eq!(RowRuleKind::by_name("unknown"), None);
        assert_eq!(RowRuleKind::FinftyChain.name(), "finfty_chain");
    }
}
