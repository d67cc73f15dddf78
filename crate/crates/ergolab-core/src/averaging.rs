//! Weighted backward averages over right-rooted trees, transfer-operator
//! slices, and forward group averages over word balls.
//!
//! The central quantity is the tree-weighted average
//!
//! ```text
//!            1
//! A[S](x) = ——— · Σ  f(w·x) ρ(w·x, x),        |S|ₓ = Σ ρ(w·x, x),
//!           |S|ₓ  w∈S                               w∈S
//! ```
//!
//! where `S` is a right-rooted word tree, `w·x` ranges over the preimages of
//! `x` selected by the tree, and `ρ` is the system's branch-weight cocycle.
//! Every operation here walks trees level by level from the root outward,
//! multiplying one-step branch weights along arcs, and accumulates sums with
//! compensated (Kahan) addition so that exact identities — unit level weight
//! for complete sweeps, `|▷ᴺ|ₓ = N + 1` on boundaries — survive in floating
//! point to near machine precision.
//!
//! Three expansion policies control how complete sweeps grow:
//!
//! * [`BranchPolicy::Full`] expands every enumerated branch. Exact, but the
//!   frontier grows like `kⁿ`.
//! * [`BranchPolicy::Threshold`] drops branches whose accumulated weight falls
//!   below a cutoff and books the dropped mass into the reported truncation
//!   tail, so `level weight + tail = 1` still holds exactly.
//! * [`BranchPolicy::Roulette`] replaces each node's pool of sub-cutoff
//!   branches with a single weighted sample (with a survival lottery when even
//!   the pool is light). The level sums become unbiased estimators instead of
//!   exact values, which is what makes deep sweeps of infinite-branching
//!   systems affordable.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::markov::MarkovChain;
use crate::numeric::KahanSum;
use crate::systems::{GroupAction, Observable, Point, System, SystemError};
use crate::words::{RightRootedTree, Symbol};

/// Default cap on sweep weight used by experiment drivers: complete boundary
/// sweeps stop once `|▷ᴺ|ₓ = N + 1` reaches this bound.
pub const DEFAULT_WEIGHT_BOUND: f64 = 64.0;

/// Default weight cutoff for [`BranchPolicy::Threshold`].
pub const DEFAULT_THRESHOLD_THETA: f64 = 1e-6;

/// Default weight cutoff for [`BranchPolicy::Roulette`].
pub const DEFAULT_ROULETTE_THETA: f64 = 1e-4;

/// Errors from averaging operations.
#[derive(Debug, Error)]
pub enum AveragingError {
    /// A system operation failed (insufficient prefix depth, unsupported
    /// observable, invalid point, ...).
    #[error(transparent)]
    System(#[from] SystemError),
    /// No tree word carries positive weight at the given point.
    #[error("tree has zero realizable weight at this point")]
    EmptyTreeAtPoint,
    /// The chain handed to a forward average is not a boundary chain matching
    /// the group action (finite, one state per generator and inverse, zero
    /// transition probability onto the inverse of the previous symbol).
    #[error("forward averages need a boundary chain matching the action: {0}")]
    IncompatibleChain(String),
}

/// How a complete level sweep expands preimage branches.
#[derive(Debug, Clone, PartialEq)]
pub enum BranchPolicy {
    /// Expand every enumerated branch.
    Full,
    /// Drop branches whose accumulated weight is below `theta`; the dropped
    /// mass is added to the truncation tail, keeping the weight bookkeeping
    /// exact.
    Threshold {
        /// Absolute weight cutoff.
        theta: f64,
    },
    /// Expand branches at or above `theta` exactly; represent each node's pool
    /// of lighter branches by one sample carrying the pool's total weight.
    /// Pools lighter than `theta` survive with probability `mass / theta` at
    /// boosted weight `theta`, so every level sum stays unbiased.
    Roulette {
        /// Absolute weight cutoff.
        theta: f64,
        /// Seed for the sampling stream; equal seeds reproduce the sweep.
        seed: u64,
    },
}

/// Result of evaluating one tree at one point.
#[derive(Debug, Clone)]
pub struct TreeEvaluation {
    /// Label of the evaluated tree (see [`RightRootedTree::label`]).
    pub tree_label: String,
    /// The base point the tree was rooted at.
    pub base: Point,
    /// Realizable tree weight `|S|ₓ`.
    pub total_weight: f64,
    /// `Σ f(w·x) ρ(w·x, x)` over realizable tree words.
    pub weighted_sum: f64,
    /// Weight of enumeration tails beyond the branch cap, accumulated over
    /// every expanded node. Zero for finite-branching systems.
    pub truncation_tail: f64,
}

impl TreeEvaluation {
    /// The weighted average `weighted_sum / total_weight`.
    pub fn average(&self) -> f64 {
        self.weighted_sum / self.total_weight
    }
}

/// Row label inside an [`AveragingReport`]: either a sweep level or a named
/// tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RowIndex {
    /// Complete sweep truncated at this level.
    Level(usize),
    /// A specific tree, identified by its label.
    Tree(String),
}

impl std::fmt::Display for RowIndex {
    fn fmt(&self, out: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RowIndex::Level(n) => write!(out, "{n}"),
            RowIndex::Tree(label) => write!(out, "{label}"),
        }
    }
}

/// One row of an averaging experiment.
#[derive(Debug, Clone)]
pub struct ReportRow {
    /// Which truncation or tree this row describes.
    pub index: RowIndex,
    /// Total realizable weight behind the average.
    pub total_weight: f64,
    /// The weighted average itself.
    pub average: f64,
    /// The invariant limit the average should approach, when the system can
    /// supply one.
    pub target: Option<f64>,
    /// Accumulated truncation tail (see [`TreeEvaluation::truncation_tail`]).
    pub truncation_tail: f64,
}

impl ReportRow {
    /// `|average − target|`, when a target is known.
    pub fn abs_error(&self) -> Option<f64> {
        self.target.map(|t| (self.average - t).abs())
    }
}

/// A sequence of averages produced by one experiment at one point.
#[derive(Debug, Clone)]
pub struct AveragingReport {
    /// Identifier of the system the averages were computed on.
    pub system_id: String,
    /// Name of the averaged observable.
    pub observable: String,
    /// The base point.
    pub point: Point,
    /// One row per truncation level or per tree.
    pub rows: Vec<ReportRow>,
}

fn ensure_depth(x: &Point, required: usize) -> Result<(), SystemError> {
    let available = x.depth();
    if available < required {
        return Err(SystemError::InsufficientDepth {
            required,
            available,
        });
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Explicit-tree evaluation
// ---------------------------------------------------------------------------

/// Walks an explicit tree at `x`, multiplying branch weights along arcs.
///
/// Nodes are visited in level order (parents strictly before children), each
/// node's weight is `parent weight × one-step branch weight`, and words whose
/// branch does not exist (zero transition probability) are skipped together
/// with their entire subtree. When `f` is `None` the value sum equals the
/// weight sum.
fn evaluate_tree(
    system: &dyn System,
    f: Option<&Observable>,
    tree: &RightRootedTree,
    x: &Point,
) -> Result<TreeEvaluation, AveragingError> {
    let depth_needed = tree.height() + f.map_or(0, Observable::depth);
    ensure_depth(x, depth_needed)?;

    let n = tree.len();
    let mut weights = vec![0.0_f64; n];
    let mut points: Vec<Option<Point>> = vec![None; n];
    weights[0] = 1.0;
    points[0] = Some(x.clone());

    let mut total = KahanSum::new();
    let mut value_sum = KahanSum::new();
    let mut tail = KahanSum::new();

    for idx in 0..n {
        let w = weights[idx];
        if w == 0.0 {
            continue;
        }
        let point = points[idx].take().expect("positive-weight node has a point");
        total.add(w);
        match f {
            Some(observable) => value_sum.add(w * system.evaluate(observable, &point)?),
            None => value_sum.add(w),
        }
        let kids = tree.children_of(idx);
        if kids.is_empty() {
            continue;
        }
        let set = system.preimages(&point)?;
        tail.add(w * set.tail);
        for &(symbol, child) in kids {
            if let Some(branch) = set.branch_for(symbol) {
                weights[child] = w * branch.weight;
                points[child] = Some(branch.point.clone());
            }
        }
    }

    let total_weight = total.total();
    if total_weight <= 0.0 {
        return Err(AveragingError::EmptyTreeAtPoint);
    }
    Ok(TreeEvaluation {
        tree_label: tree.label(),
        base: x.clone(),
        total_weight,
        weighted_sum: value_sum.total(),
        truncation_tail: tail.total(),
    })
}

/// Computes the realizable weight `|S|ₓ` of a tree at a point.
///
/// The root always contributes weight one; words whose branch weight vanishes
/// are skipped along with their subtrees. On a stationary boundary chain the
/// complete trees satisfy `|T⁻ⁿ(x)|ₓ = 1` and `|▷ᴺ·x|ₓ = N + 1` up to the
/// enumeration tail.
pub fn tree_weight(
    system: &dyn System,
    tree: &RightRootedTree,
    x: &Point,
) -> Result<f64, AveragingError> {
    evaluate_tree(system, None, tree, x).map(|eval| eval.total_weight)
}

/// Computes the weighted average of `f` over the preimages selected by `tree`.
///
/// Requires `x` to carry prefix depth at least `tree.height() + f.depth()`;
/// shallower points fail with [`SystemError::InsufficientDepth`] before any
/// work is done.
pub fn weighted_average(
    system: &dyn System,
    f: &Observable,
    tree: &RightRootedTree,
    x: &Point,
) -> Result<TreeEvaluation, AveragingError> {
    evaluate_tree(system, Some(f), tree, x)
}

/// Forward average over a boundary tree: by the change-of-variables between
/// forward images and preimages this is the same computation as
/// [`weighted_average`] on the boundary shift, and is implemented as such.
pub fn boundary_forward_average(
    system: &dyn System,
    f: &Observable,
    tree: &RightRootedTree,
    x: &Point,
) -> Result<TreeEvaluation, AveragingError> {
    weighted_average(system, f, tree, x)
}

// ---------------------------------------------------------------------------
// Complete level sweeps
// ---------------------------------------------------------------------------

struct LevelSweep<'a> {
    system: &'a dyn System,
    policy: BranchPolicy,
    rng: Option<ChaCha8Rng>,
    /// Current frontier: every realizable (or sampled) preimage at the
    /// current level, with its accumulated weight.
    frontier: Vec<(Point, f64)>,
    /// Mass absorbed so far: enumeration tails plus weight dropped by the
    /// threshold policy. Under exact arithmetic,
    /// `frontier weight + absorbed = 1` at every level.
    absorbed: KahanSum,
    level: usize,
}

impl<'a> LevelSweep<'a> {
    fn new(system: &'a dyn System, x: &Point, policy: &BranchPolicy) -> Self {
        let rng = match policy {
            BranchPolicy::Roulette { seed, .. } => Some(ChaCha8Rng::seed_from_u64(*seed)),
            _ => None,
        };
        LevelSweep {
            system,
            policy: policy.clone(),
            rng,
            frontier: vec![(x.clone(), 1.0)],
            absorbed: KahanSum::new(),
            level: 0,
        }
    }

    fn absorbed_mass(&self) -> f64 {
        self.absorbed.total()
    }

    /// Weight and `f`-sum of the current frontier.
    fn level_values(&self, f: &Observable) -> Result<(f64, f64), SystemError> {
        let mut weight = KahanSum::new();
        let mut sum = KahanSum::new();
        for (point, w) in &self.frontier {
            weight.add(*w);
            sum.add(*w * self.system.evaluate(f, point)?);
        }
        Ok((weight.total(), sum.total()))
    }

    /// Replaces the frontier by the next preimage level.
    fn advance(&mut self) -> Result<(), SystemError> {
        let mut next = Vec::with_capacity(self.frontier.len().saturating_mul(2));
        let mut pool: Vec<(Point, f64)> = Vec::new();
        for (point, w) in std::mem::take(&mut self.frontier) {
            let set = self.system.preimages(&point)?;
            self.absorbed.add(w * set.tail);
            match self.policy {
                BranchPolicy::Full => {
                    for branch in &set.branches {
                        next.push((branch.point.clone(), w * branch.weight));
                    }
                }
                BranchPolicy::Threshold { theta } => {
                    for branch in &set.branches {
                        let cw = w * branch.weight;
                        if cw >= theta {
                            next.push((branch.point.clone(), cw));
                        } else {
                            self.absorbed.add(cw);
                        }
                    }
                }
                BranchPolicy::Roulette { theta, .. } => {
                    pool.clear();
                    for branch in &set.branches {
                        let cw = w * branch.weight;
                        if cw >= theta {
                            next.push((branch.point.clone(), cw));
                        } else if cw > 0.0 {
                            pool.push((branch.point.clone(), cw));
                        }
                    }
                    if let Some(sampled) = sample_pool(&mut pool, theta, self.rng.as_mut()) {
                        next.push(sampled);
                    }
                }
            }
        }
        self.frontier = next;
        self.level += 1;
        Ok(())
    }
}

/// Draws one representative from a pool of light branches, carrying the whole
/// pool mass, with a survival lottery (boost to `theta`) when the pool itself
/// is lighter than the cutoff. Expected pushed weight per branch equals its
/// true weight, so downstream sums stay unbiased.
fn sample_pool(
    pool: &mut Vec<(Point, f64)>,
    theta: f64,
    rng: Option<&mut ChaCha8Rng>,
) -> Option<(Point, f64)> {
    if pool.is_empty() {
        return None;
    }
    let rng = rng.expect("roulette policy carries a sampling stream");
    let mass: f64 = pool.iter().map(|(_, w)| w).sum();
    if mass <= 0.0 {
        return None;
    }
    let carried = if mass >= theta {
        mass
    } else {
        // Light pool: survive with probability mass/theta at weight theta.
        if rng.gen::<f64>() >= mass / theta {
            return None;
        }
        theta
    };
    let mut pick = rng.gen::<f64>() * mass;
    let mut chosen = pool.len() - 1;
    for (i, (_, w)) in pool.iter().enumerate() {
        pick -= w;
        if pick <= 0.0 {
            chosen = i;
            break;
        }
    }
    let (point, _) = pool.swap_remove(chosen);
    Some((point, carried))
}

/// Evaluates the level-`n` transfer-operator slice
/// `Σ f(w·x) ρ(w·x, x)` over all `n`-fold preimages of `x`.
///
/// For a measure-preserving finite-branching system and `f ≡ 1` this equals
/// one at every `n`. `n = 0` returns `f(x)`.
pub fn transfer_iterate(
    system: &dyn System,
    f: &Observable,
    n: usize,
    x: &Point,
    policy: &BranchPolicy,
) -> Result<f64, AveragingError> {
    ensure_depth(x, n + f.depth())?;
    let mut sweep = LevelSweep::new(system, x, policy);
    for _ in 0..n {
        sweep.advance()?;
    }
    let (_, sum) = sweep.level_values(f)?;
    Ok(sum)
}

/// Runs the Cesàro backward sweep `A[T⁻⁰ ∪ … ∪ T⁻ⁿ](x)` for every
/// `n ≤ n_max`, reusing each level's frontier for the next.
///
/// Row `n` reports the cumulative weight, the cumulative weighted average
/// (weighted sum divided by total weight), the system's invariant target when
/// known, and the mass absorbed by tails and pruning up to that level.
pub fn cesaro_backward(
    system: &dyn System,
    f: &Observable,
    n_max: usize,
    x: &Point,
    policy: &BranchPolicy,
) -> Result<AveragingReport, AveragingError> {
    ensure_depth(x, n_max + f.depth())?;
    let target = system.invariant_target(f, x);
    let mut sweep = LevelSweep::new(system, x, policy);
    let mut weight_acc = KahanSum::new();
    let mut sum_acc = KahanSum::new();
    let mut rows = Vec::with_capacity(n_max + 1);
    for n in 0..=n_max {
        if n > 0 {
            sweep.advance()?;
        }
        let (w, s) = sweep.level_values(f)?;
        weight_acc.add(w);
        sum_acc.add(s);
        let total_weight = weight_acc.total();
        if total_weight <= 0.0 {
            return Err(AveragingError::EmptyTreeAtPoint);
        }
        rows.push(ReportRow {
            index: RowIndex::Level(n),
            total_weight,
            average: sum_acc.total() / total_weight,
            target,
            truncation_tail: sweep.absorbed_mass(),
        });
    }
    Ok(AveragingReport {
        system_id: system.id(),
        observable: f.name(),
        point: x.clone(),
        rows,
    })
}

/// Evaluates `f` over each tree in `trees` at the same point and reports the
/// averages ordered by increasing realizable weight — the natural order for
/// watching averages settle as trees grow.
pub fn tree_sweep_backward(
    system: &dyn System,
    f: &Observable,
    trees: &[RightRootedTree],
    x: &Point,
) -> Result<AveragingReport, AveragingError> {
    let target = system.invariant_target(f, x);
    let mut rows = Vec::with_capacity(trees.len());
    for tree in trees {
        let eval = weighted_average(system, f, tree, x)?;
        rows.push(ReportRow {
            index: RowIndex::Tree(eval.tree_label.clone()),
            total_weight: eval.total_weight,
            average: eval.average(),
            target,
            truncation_tail: eval.truncation_tail,
        });
    }
    rows.sort_by(|a, b| {
        a.total_weight
            .partial_cmp(&b.total_weight)
            .expect("tree weights are finite")
    });
    Ok(AveragingReport {
        system_id: system.id(),
        observable: f.name(),
        point: x.clone(),
        rows,
    })
}

// ---------------------------------------------------------------------------
// Forward group averages
// ---------------------------------------------------------------------------

/// Mass and weighted sum of a forward average, kept separate so callers can
/// normalize either by the tree mass `ℙ(S)` or by a word count.
#[derive(Debug, Clone, Copy)]
pub struct ForwardEvaluation {
    /// `ℙ(S) = Σ_{w∈S} ℙ(w)`, the chain measure of the tree's words.
    pub mass: f64,
    /// `Σ_{w∈S} f(w·x) ℙ(w)`.
    pub weighted_sum: f64,
}

impl ForwardEvaluation {
    /// The mass-normalized forward average `weighted_sum / mass`.
    pub fn average(&self) -> f64 {
        self.weighted_sum / self.mass
    }
}

/// Checks that `chain` is a finite boundary chain compatible with `action`:
/// one state per generator and inverse, and zero probability of stepping onto
/// the inverse of the previous symbol. Returns the state count.
fn boundary_chain_states(
    action: &dyn GroupAction,
    chain: &MarkovChain,
) -> Result<u32, AveragingError> {
    let states = chain.state_count().ok_or_else(|| {
        AveragingError::IncompatibleChain("chain must have finitely many states".into())
    })?;
    if states == 0 || states % 2 != 0 {
        return Err(AveragingError::IncompatibleChain(format!(
            "state count {states} is not of the form 2r"
        )));
    }
    if states / 2 != action.rank() {
        return Err(AveragingError::IncompatibleChain(format!(
            "chain has {} generator pairs but the action has rank {}",
            states / 2,
            action.rank()
        )));
    }
    let states = u32::try_from(states)
        .map_err(|_| AveragingError::IncompatibleChain("state count overflows".into()))?;
    for s in 0..states {
        if chain.transition(s, s ^ 1) != 0.0 {
            return Err(AveragingError::IncompatibleChain(format!(
                "transition {s} -> {} onto the inverse must vanish",
                s ^ 1
            )));
        }
    }
    Ok(states)
}

/// Computes the forward group average
/// `(1/ℙ(S)) Σ_{w∈S} f(w·x) ℙ(w)` for a word tree `S`, a boundary chain
/// measure `ℙ`, and a group action on the circle.
///
/// Both the word measure and the acted point are carried incrementally along
/// tree arcs: prepending `s` to `w` multiplies the measure by
/// `π(s) P(s, w₀) / π(w₀)` and applies the single rotation `s` to `w·x`, so
/// the walk costs constant work per tree word.
pub fn forward_group_average(
    action: &dyn GroupAction,
    chain: &MarkovChain,
    tree: &RightRootedTree,
    base: f64,
    f: &dyn Fn(f64) -> f64,
) -> Result<ForwardEvaluation, AveragingError> {
    boundary_chain_states(action, chain)?;
    let n = tree.len();
    let mut measure = vec![0.0_f64; n];
    let mut orbit = vec![0.0_f64; n];
    measure[0] = 1.0;
    orbit[0] = base;

    let mut mass = KahanSum::new();
    let mut sum = KahanSum::new();
    for idx in 0..n {
        let p = measure[idx];
        if p == 0.0 {
            continue;
        }
        mass.add(p);
        sum.add(p * f(orbit[idx]));
        let first = tree.word(idx).outer_symbol();
        for &(symbol, child) in tree.children_of(idx) {
            let factor = match first {
                None => chain.initial_probability(symbol),
                Some(t) => {
                    chain.initial_probability(symbol) * chain.transition(symbol, t)
                        / chain.initial_probability(t)
                }
            };
            if factor > 0.0 {
                measure[child] = p * factor;
                orbit[child] = action.apply_symbol(symbol, orbit[idx]);
            }
        }
    }
    let mass = mass.total();
    if mass <= 0.0 {
        return Err(AveragingError::EmptyTreeAtPoint);
    }
    Ok(ForwardEvaluation {
        mass,
        weighted_sum: sum.total(),
    })
}

/// Forward averages over the complete unreduced word balls `I^{≤n}` for every
/// `n ≤ n_max`, without materializing the balls.
///
/// Returns one cumulative [`ForwardEvaluation`] per `n`; entry `n` covers all
/// words of length at most `n` with positive chain measure. On a stationary
/// boundary chain the ball masses are exactly `n + 1`, which makes
/// `weighted_sum / (n + 1)` the equal-normalization variant of the average.
pub fn forward_ball_report(
    action: &dyn GroupAction,
    chain: &MarkovChain,
    n_max: usize,
    base: f64,
    f: &dyn Fn(f64) -> f64,
) -> Result<Vec<ForwardEvaluation>, AveragingError> {
    let states = boundary_chain_states(action, chain)?;
    let mut mass = KahanSum::new();
    let mut sum = KahanSum::new();
    mass.add(1.0);
    sum.add(f(base));
    let mut report = Vec::with_capacity(n_max + 1);
    report.push(ForwardEvaluation {
        mass: mass.total(),
        weighted_sum: sum.total(),
    });

    // Frontier entry: (outermost symbol, word measure, acted point).
    let mut frontier: Vec<(Symbol, f64, f64)> = (0..states)
        .filter(|&s| chain.initial_probability(s) > 0.0)
        .map(|s| {
            (
                s,
                chain.initial_probability(s),
                action.apply_symbol(s, base),
            )
        })
        .collect();

    for _ in 1..=n_max {
        let mut level_mass = KahanSum::new();
        let mut level_sum = KahanSum::new();
        for &(_, p, theta) in &frontier {
            level_mass.add(p);
            level_sum.add(p * f(theta));
        }
        mass.add(level_mass.total());
        sum.add(level_sum.total());
        report.push(ForwardEvaluation {
            mass: mass.total(),
            weighted_sum: sum.total(),
        });

        let mut next = Vec::with_capacity(frontier.len().saturating_mul(2));
        for &(t, p, theta) in &frontier {
            for s in 0..states {
                let step = chain.transition(s, t);
                if step > 0.0 {
                    let factor = chain.initial_probability(s) * step / chain.initial_probability(t);
                    next.push((s, p * factor, action.apply_symbol(s, theta)));
                }
            }
        }
        frontier = next;
    }
    report.truncate(n_max + 1);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::{
        bernoulli_system, block_chain_system, boundary_system, circle_rotation_action,
        gauss_system, skew_product_system, CircleRotationAction,
    };
    use crate::words::{complete_tree, Alphabet, Word};

    fn symbolic(symbols: &[Symbol]) -> Point {
        Point::symbolic(Word::new(symbols.to_vec()))
    }

    fn repeated(symbol: Symbol, depth: usize) -> Point {
        Point::symbolic(Word::new(vec![symbol; depth]))
    }

    #[test]
    fn complete_tree_weight_counts_levels_on_bernoulli() {
        let system = bernoulli_system(2);
        let tree = complete_tree(&Alphabet::plain(2), 2, false, None).unwrap();
        let x = symbolic(&[0, 1, 0, 1]);
        let w = tree_weight(&system, &tree, &x).unwrap();
        assert!((w - 3.0).abs() < 1e-12, "ball of height 2 weighs {w}");
    }

    #[test]
    fn singleton_tree_weighs_exactly_one() {
        let system = bernoulli_system(3);
        let tree = RightRootedTree::from_words(vec![Word::empty()]).unwrap();
        let x = symbolic(&[2]);
        assert_eq!(tree_weight(&system, &tree, &x).unwrap(), 1.0);
    }

    #[test]
    fn zero_weight_words_are_skipped_with_their_subtrees() {
        // On the rank-2 boundary the unreduced ball of height 1 contains the
        // inverse of the point's first symbol; that branch has probability
        // zero, so the ball weighs 1 + 3·(1/3) = 2 rather than 1 + 4·(1/3).
        let system = boundary_system(2, MarkovChain::uniform_free_group(2), "uniform").unwrap();
        let tree = complete_tree(&Alphabet::free_group(2), 1, false, None).unwrap();
        let x = repeated(0, 2);
        let w = tree_weight(&system, &tree, &x).unwrap();
        assert!((w - 2.0).abs() < 1e-12, "unreduced height-1 ball weighs {w}");
    }

    #[test]
    fn weighted_average_of_first_symbol_indicator_on_half_half_coin() {
        let system = bernoulli_system(2);
        let f = Observable::indicator_first_symbol(2, 0);
        let tree = complete_tree(&Alphabet::plain(2), 1, false, None).unwrap();
        let x = symbolic(&[0, 0]);
        let eval = weighted_average(&system, &f, &tree, &x).unwrap();
        // Root sees the indicator fire (x starts with 0) and one of the two
        // half-weight preimages starts with 0: (1 + 1/2) / 2.
        assert!((eval.total_weight - 2.0).abs() < 1e-12);
        assert!((eval.average() - 0.75).abs() < 1e-12);
    }

    #[test]
    fn average_of_constant_is_constant_regardless_of_truncation() {
        let system = gauss_system(50);
        let f = Observable::constant(2.5);
        let tree = complete_tree(&Alphabet::plain(50), 1, false, None).unwrap();
        let x = Point::real_checked(0.3719094262094035).unwrap();
        let eval = weighted_average(&system, &f, &tree, &x).unwrap();
        assert!((eval.average() - 2.5).abs() < 1e-13);
        // The height-1 complete tree over 50 digits misses exactly the
        // analytic tail beyond the branch cap.
        let expected_tail = (1.0 + 0.3719094262094035) / (51.0 + 0.3719094262094035);
        assert!((eval.truncation_tail - expected_tail).abs() < 1e-12);
        assert!((eval.total_weight - (2.0 - expected_tail)).abs() < 1e-12);
    }

    #[test]
    fn insufficient_prefix_depth_is_rejected_before_any_work() {
        let system = bernoulli_system(2);
        let f = Observable::indicator_first_symbol(2, 0);
        let tree = complete_tree(&Alphabet::plain(2), 3, false, None).unwrap();
        let x = symbolic(&[0, 1]);
        let err = weighted_average(&system, &f, &tree, &x).unwrap_err();
        match err {
            AveragingError::System(SystemError::InsufficientDepth {
                required,
                available,
            }) => {
                assert_eq!(required, 4);
                assert_eq!(available, 2);
            }
            other => panic!("expected a depth error, got {other:?}"),
        }
    }

    #[test]
    fn transfer_slice_of_indicator_is_half_after_one_step() {
        let system = bernoulli_system(2);
        let f = Observable::indicator_first_symbol(2, 0);
        let x = symbolic(&[1, 1, 1]);
        let v0 = transfer_iterate(&system, &f, 0, &x, &BranchPolicy::Full).unwrap();
        assert_eq!(v0, 0.0, "level zero is just f at the point");
        let v1 = transfer_iterate(&system, &f, 1, &x, &BranchPolicy::Full).unwrap();
        assert!((v1 - 0.5).abs() < 1e-14);
    }

    #[test]
    fn transfer_slices_of_one_stay_one_on_finite_systems() {
        let systems = [
            bernoulli_system(3),
            boundary_system(2, MarkovChain::uniform_free_group(2), "uniform").unwrap(),
        ];
        let points = [symbolic(&[1; 8]), repeated(2, 8)];
        for (system, x) in systems.iter().zip(points.iter()) {
            for n in 0..=6 {
                let v = transfer_iterate(
                    system,
                    &Observable::constant(1.0),
                    n,
                    x,
                    &BranchPolicy::Full,
                )
                .unwrap();
                assert!(
                    (v - 1.0).abs() < 1e-12,
                    "{} level {n} sums to {v}",
                    system.id()
                );
            }
        }
    }

    #[test]
    fn cesaro_rows_match_the_closed_form_on_the_coin_flip() {
        // With f the indicator of first symbol 0 and a point starting with 0,
        // level 0 contributes 1 and every deeper level contributes exactly
        // 1/2, so row n is (1 + n/2)/(n + 1).
        let system = bernoulli_system(2);
        let f = Observable::indicator_first_symbol(2, 0);
        let x = symbolic(&[0; 9]);
        let report =
            cesaro_backward(&system, &f, 8, &x, &BranchPolicy::Full).unwrap();
        assert_eq!(report.rows.len(), 9);
        for (n, row) in report.rows.iter().enumerate() {
            let expected = (1.0 + n as f64 / 2.0) / (n as f64 + 1.0);
            assert!(
                (row.average - expected).abs() < 1e-12,
                "row {n}: {} vs {expected}",
                row.average
            );
            assert!((row.total_weight - (n as f64 + 1.0)).abs() < 1e-12);
            assert_eq!(row.target, Some(0.5));
        }
        assert!((report.rows[3].average - 0.625).abs() < 1e-14);
    }

    #[test]
    fn cesaro_matches_running_mean_of_transfer_slices() {
        let system =
            crate::systems::markov_shift_system(MarkovChain::two_state(), "two_state").unwrap();
        let f = Observable::indicator_first_symbol(2, 1);
        let x = symbolic(&[1, 0, 0, 1, 0, 0, 1]);
        let report =
            cesaro_backward(&system, &f, 5, &x, &BranchPolicy::Full).unwrap();
        let mut running = 0.0;
        for (n, row) in report.rows.iter().enumerate() {
            running +=
                transfer_iterate(&system, &f, n, &x, &BranchPolicy::Full).unwrap();
            let mean = running / (n as f64 + 1.0);
            assert!(
                (row.average - mean).abs() < 1e-12,
                "row {n} disagrees with the slice mean"
            );
        }
    }

    #[test]
    fn block_indicator_is_invariant_along_the_sweep() {
        let system = block_chain_system();
        let f = Observable::by_first_symbol(vec![1.0, 1.0, 0.0, 0.0], "block_a");
        let x = symbolic(&[0, 1, 1, 0, 0, 1, 0]);
        let report =
            cesaro_backward(&system, &f, 6, &x, &BranchPolicy::Full).unwrap();
        for row in &report.rows {
            assert!(
                (row.average - 1.0).abs() < 1e-12,
                "block membership drifted to {}",
                row.average
            );
            assert_eq!(row.target, Some(1.0));
        }
    }

    #[test]
    fn threshold_policy_books_dropped_mass_into_the_tail() {
        let system = gauss_system(50);
        let f = Observable::constant(1.0);
        let x = Point::real_checked(0.6180339887498949).unwrap();
        let policy = BranchPolicy::Threshold { theta: 1e-5 };
        let report = cesaro_backward(&system, &f, 5, &x, &policy).unwrap();
        for (n, row) in report.rows.iter().enumerate() {
            // Level k's frontier misses exactly the mass absorbed up to
            // level k, so the cumulative weight through level n plus the sum
            // of per-row absorbed masses telescopes back to n + 1.
            let missing: f64 = report.rows[..=n].iter().map(|r| r.truncation_tail).sum();
            let drift = (row.total_weight + missing - (n as f64 + 1.0)).abs();
            assert!(drift < 1e-9, "level {n} books mass with drift {drift}");
            assert!(row.truncation_tail > 0.0 || n == 0);
        }
    }

    #[test]
    fn roulette_policy_is_reproducible_and_tracks_the_target() {
        let system = gauss_system(50);
        let f = Observable::real_identity();
        let x = Point::real_checked(0.7320508075688772).unwrap();
        let policy = BranchPolicy::Roulette {
            theta: 1e-4,
            seed: 2024,
        };
        let a = cesaro_backward(&system, &f, 8, &x, &policy).unwrap();
        let b = cesaro_backward(&system, &f, 8, &x, &policy).unwrap();
        for (ra, rb) in a.rows.iter().zip(&b.rows) {
            assert_eq!(ra.average, rb.average, "same seed, same sweep");
        }
        let last = a.rows.last().unwrap();
        let target = last.target.expect("identity has a known mean");
        assert!(
            (last.average - target).abs() < 0.15,
            "average {} strayed far from {target}",
            last.average
        );
    }

    #[test]
    fn tree_sweep_orders_rows_by_weight() {
        let system = boundary_system(2, MarkovChain::uniform_free_group(2), "uniform").unwrap();
        let f = Observable::indicator_first_symbol(4, 0);
        let alphabet = Alphabet::free_group(2);
        let trees = vec![
            complete_tree(&alphabet, 2, true, None).unwrap(),
            RightRootedTree::from_words(vec![Word::empty()]).unwrap(),
            complete_tree(&alphabet, 1, true, None).unwrap(),
        ];
        let x = repeated(0, 5);
        let report = tree_sweep_backward(&system, &f, &trees, &x).unwrap();
        assert_eq!(report.rows.len(), 3);
        for pair in report.rows.windows(2) {
            assert!(pair[0].total_weight <= pair[1].total_weight);
        }
        assert!((report.rows[0].total_weight - 1.0).abs() < 1e-12);
        assert!((report.rows[2].total_weight - 3.0).abs() < 1e-12);
        for row in &report.rows {
            assert!((0.0..=1.0).contains(&row.average));
        }
    }

    #[test]
    fn boundary_forward_average_equals_the_backward_ball_average() {
        let system = boundary_system(2, MarkovChain::uniform_free_group(2), "uniform").unwrap();
        let f = Observable::indicator_first_symbol(4, 2);
        // The point starts with symbol 0, so the realizable reduced ball
        // forbids the root-adjacent symbol 1 (its inverse) and carries full
        // weight height + 1.
        let x = repeated(0, 6);
        let alphabet = Alphabet::free_group(2);
        let ball = complete_tree(&alphabet, 3, true, Some(1)).unwrap();
        let forward = boundary_forward_average(&system, &f, &ball, &x).unwrap();
        let backward = weighted_average(&system, &f, &ball, &x).unwrap();
        assert_eq!(forward.total_weight, backward.total_weight);
        assert_eq!(forward.average(), backward.average());
        assert!((forward.total_weight - 4.0).abs() < 1e-12);
    }

    #[test]
    fn ball_masses_grow_by_one_per_level() {
        let action = CircleRotationAction::standard(2);
        let chain = MarkovChain::uniform_free_group(2);
        let report = forward_ball_report(&action, &chain, 8, 0.25, &|_| 1.0).unwrap();
        for (n, eval) in report.iter().enumerate() {
            assert!(
                (eval.mass - (n as f64 + 1.0)).abs() < 1e-10,
                "ball {n} has mass {}",
                eval.mass
            );
        }
    }

    #[test]
    fn forward_average_over_one_step_ball_matches_hand_computation() {
        // Words of length <= 1 over two rotation generators: the identity plus
        // rotations by ±α and ±β, each with measure 1/4. Averaging the cosine
        // wave gives (1/2)[1 + (cos 2πα + cos 2πβ)/2] since cosine is even.
        let action = CircleRotationAction::standard(2);
        let alpha = action.angles()[0];
        let beta = action.angles()[1];
        let chain = MarkovChain::uniform_free_group(2);
        let tree = complete_tree(&Alphabet::free_group(2), 1, false, None).unwrap();
        let f = |t: f64| (std::f64::consts::TAU * t).cos();
        let eval = forward_group_average(&action, &chain, &tree, 0.0, &f).unwrap();
        let expected = 0.5
            * (1.0
                + 0.5
                    * ((std::f64::consts::TAU * alpha).cos()
                        + (std::f64::consts::TAU * beta).cos()));
        assert!((eval.mass - 2.0).abs() < 1e-12);
        assert!(
            (eval.average() - expected).abs() < 1e-12,
            "{} vs {expected}",
            eval.average()
        );
    }

    #[test]
    fn forward_report_agrees_with_explicit_tree_evaluation() {
        let action = CircleRotationAction::standard(2);
        let chain = MarkovChain::uniform_free_group(2);
        let f = |t: f64| (std::f64::consts::TAU * t).cos();
        let base = 0.381966011250105;
        let report = forward_ball_report(&action, &chain, 5, base, &f).unwrap();
        for (n, level) in report.iter().enumerate() {
            let tree = complete_tree(&Alphabet::free_group(2), n, false, None).unwrap();
            let eval = forward_group_average(&action, &chain, &tree, base, &f).unwrap();
            assert!(
                (level.mass - eval.mass).abs() < 1e-10,
                "ball {n} masses disagree"
            );
            assert!(
                (level.weighted_sum - eval.weighted_sum).abs() < 1e-10,
                "ball {n} sums disagree"
            );
        }
    }

    #[test]
    fn forward_average_rejects_mismatched_chains() {
        let action = CircleRotationAction::standard(2);
        let tree = complete_tree(&Alphabet::free_group(2), 1, false, None).unwrap();
        let f = |_: f64| 1.0;
        let wrong_rank = MarkovChain::uniform_free_group(3);
        assert!(matches!(
            forward_group_average(&action, &wrong_rank, &tree, 0.0, &f),
            Err(AveragingError::IncompatibleChain(_))
        ));
        let not_boundary = MarkovChain::uniform_bernoulli(4).unwrap();
        assert!(matches!(
            forward_group_average(&action, &not_boundary, &tree, 0.0, &f),
            Err(AveragingError::IncompatibleChain(_))
        ));
    }

    #[test]
    fn forward_average_matches_stationary_combination_of_backward_averages() {
        // ℙ(S) must equal Σᵢ π(i)·|S·yᵢ| with yᵢ any point starting with
        // symbol i, and the forward average must be the corresponding
        // π-weighted mix of backward averages on the skew product.
        let rank = 2;
        let action = CircleRotationAction::standard(rank);
        let chain = MarkovChain::uniform_free_group(rank);
        let skew = skew_product_system(
            Box::new(circle_rotation_action(action.angles().to_vec())),
            chain.clone(),
            "rotation",
        )
        .unwrap();
        let alphabet = Alphabet::free_group(rank);
        let tree = crate::words::random_tree(&alphabet, 3, 14, 77, true, None).unwrap();
        let base = 0.2360679774997897;
        let f = |t: f64| (std::f64::consts::TAU * t).cos();
        let forward = forward_group_average(&action, &chain, &tree, base, &f).unwrap();

        let observable = Observable::base_cosine();
        let mut mass = 0.0;
        let mut sum = 0.0;
        for i in 0..4u32 {
            let pi = chain.initial_probability(i);
            let fiber = Word::new(vec![i; 4]);
            let y = Point::product(base, fiber);
            let eval = weighted_average(&skew, &observable, &tree, &y).unwrap();
            mass += pi * eval.total_weight;
            sum += pi * eval.weighted_sum;
        }
        assert!(
            (forward.mass - mass).abs() < 1e-10,
            "masses {} vs {mass}",
            forward.mass
        );
        assert!(
            (forward.weighted_sum - sum).abs() < 1e-10,
            "sums {} vs {sum}",
            forward.weighted_sum
        );
    }
}
