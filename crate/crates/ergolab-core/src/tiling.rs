//! Greedy monotilings of preimage triangles.
//!
//! A *tile assignment* gives every point `y` a right-rooted tree `S_y`. The
//! greedy tiler scans the triangle `▷ᴺ·x` — all realizable preimage words of
//! length at most `N` — level by level from the root, and at each uncovered
//! word `y` places the translated tile `S_y·y` whenever it fits inside the
//! triangle. Because tiles are right-rooted (suffix-closed), the
//! uncovered-root check alone guarantees that placed tiles never overlap, and
//! the words left uncovered fall into exactly two classes: words within the
//! outer band of the triangle, and roots whose own tile was too tall to fit.
//!
//! Coverage is always measured in ρ-weight relative to `x`, never in raw word
//! counts, and on a measure-preserving system the triangle's total weight is
//! `N + 1` up to float drift.
//!
//! Two evaluation strategies produce identical results on their common
//! domain:
//!
//! * [`greedy_tile`] materializes the triangle, places tiles explicitly,
//!   asserts disjointness word by word, and records where each tile went.
//!   Its cost is the triangle size, so it is for moderate `N`.
//! * For assignments whose tiles are full preimage triangles (`▷ᴸ` with the
//!   height read off the root symbol), whether a word is covered depends only
//!   on its own suffix chain; [`tiling_parameter_sweep`] then evaluates the
//!   greedy outcome exactly by a phase recursion over (cover debt, symbol)
//!   under the chain's reversed kernel, which is how deep sweeps (`N` in the
//!   tens) stay affordable.

use std::collections::HashMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::numeric::{subseed, KahanSum};
use crate::systems::{MarkovShiftSystem, Point, System, SystemError};
use crate::words::{RightRootedTree, Symbol, Word};

/// Hard cap on materialized triangle size for [`greedy_tile`]; larger
/// triangles fail with [`TilingError::TriangleTooLarge`] instead of
/// exhausting memory.
pub const MAX_TRIANGLE_WORDS: usize = 4_000_000;

/// Errors from tiling operations.
#[derive(Debug, Error)]
pub enum TilingError {
    /// A system operation failed.
    #[error(transparent)]
    System(#[from] SystemError),
    /// A per-symbol rule was asked for a symbol it has no tile for (or for a
    /// point with no readable first coordinate).
    #[error("no tile assigned for symbol {symbol:?}")]
    MissingTile {
        /// The offending first coordinate, if one was readable.
        symbol: Option<Symbol>,
    },
    /// The materialized triangle would exceed [`MAX_TRIANGLE_WORDS`].
    #[error("triangle ▷^{n} holds more than {cap} words at this point")]
    TriangleTooLarge {
        /// Requested triangle height.
        n: usize,
        /// The configured word cap.
        cap: usize,
    },
}

/// How tiles are assigned to points.
///
/// Triangle rules assign the full realizable preimage triangle of a height
/// read from (at most) the first coordinate; they admit the exact phase
/// recursion. Explicit rules assign arbitrary right-rooted trees and are
/// evaluated only by the materializing tiler.
#[derive(Debug, Clone)]
pub enum TileRule {
    /// Every point gets the triangle `▷ᴸ` of this height.
    ConstantTriangle {
        /// Tile height `L`.
        height: usize,
    },
    /// A point with first coordinate `s` gets the triangle of height
    /// `heights[s]`.
    TriangleBySymbol {
        /// Tile height per first coordinate.
        heights: Vec<usize>,
    },
    /// Every point gets the same explicit tree.
    Constant(RightRootedTree),
    /// A point with first coordinate `s` gets `trees[s]`.
    BySymbol(Vec<RightRootedTree>),
}

/// A tile assignment: the rule plus the band height used to classify
/// untiled words.
#[derive(Debug, Clone)]
pub struct TileAssignment {
    rule: TileRule,
    band_height: usize,
}

impl TileAssignment {
    /// Wraps a rule, classifying untiled words against the rule's maximum
    /// tile height.
    #[must_use]
    pub fn new(rule: TileRule) -> Self {
        let band_height = rule.max_height();
        TileAssignment { rule, band_height }
    }

    /// The constant triangle rule `S_y ≡ ▷ᴸ`.
    #[must_use]
    pub fn constant_triangle(height: usize) -> Self {
        Self::new(TileRule::ConstantTriangle { height })
    }

    /// Triangles whose height depends on the first coordinate.
    #[must_use]
    pub fn triangles_by_symbol(heights: Vec<usize>) -> Self {
        Self::new(TileRule::TriangleBySymbol { heights })
    }

    /// Overrides the band height used to split untiled mass into the outer
    /// band versus tall-tile classes. Tiles strictly taller than the band
    /// height count as tall.
    #[must_use]
    pub fn with_band_height(mut self, band_height: usize) -> Self {
        self.band_height = band_height;
        self
    }

    /// The underlying rule.
    #[must_use]
    pub fn rule(&self) -> &TileRule {
        &self.rule
    }

    /// Band height for the untiled-mass classification.
    #[must_use]
    pub fn band_height(&self) -> usize {
        self.band_height
    }

    /// How many leading coordinates of a point the rule reads.
    #[must_use]
    pub fn locality(&self) -> usize {
        match &self.rule {
            TileRule::ConstantTriangle { .. } | TileRule::Constant(_) => 0,
            TileRule::TriangleBySymbol { .. } | TileRule::BySymbol(_) => 1,
        }
    }

    /// Whether every tile is a full preimage triangle, enabling the exact
    /// phase recursion.
    #[must_use]
    pub fn is_triangular(&self) -> bool {
        matches!(
            self.rule,
            TileRule::ConstantTriangle { .. } | TileRule::TriangleBySymbol { .. }
        )
    }

    /// Tile height for a point whose first coordinate is `symbol` (`None`
    /// when the point has no readable coordinate, as at a real point).
    pub fn height_for(&self, symbol: Option<Symbol>) -> Result<usize, TilingError> {
        self.rule.height_for(symbol)
    }
}

impl TileRule {
    /// Largest height this rule ever assigns.
    #[must_use]
    pub fn max_height(&self) -> usize {
        match self {
            TileRule::ConstantTriangle { height } => *height,
            TileRule::TriangleBySymbol { heights } => heights.iter().copied().max().unwrap_or(0),
            TileRule::Constant(tree) => tree.height(),
            TileRule::BySymbol(trees) => trees.iter().map(RightRootedTree::height).max().unwrap_or(0),
        }
    }

    fn height_for(&self, symbol: Option<Symbol>) -> Result<usize, TilingError> {
        match self {
            TileRule::ConstantTriangle { height } => Ok(*height),
            TileRule::Constant(tree) => Ok(tree.height()),
            TileRule::TriangleBySymbol { heights } => {
                let s = symbol.ok_or(TilingError::MissingTile { symbol })?;
                heights
                    .get(s as usize)
                    .copied()
                    .ok_or(TilingError::MissingTile { symbol })
            }
            TileRule::BySymbol(trees) => {
                let s = symbol.ok_or(TilingError::MissingTile { symbol })?;
                trees
                    .get(s as usize)
                    .map(RightRootedTree::height)
                    .ok_or(TilingError::MissingTile { symbol })
            }
        }
    }

    fn explicit_tree(&self, symbol: Option<Symbol>) -> Result<Option<&RightRootedTree>, TilingError> {
        match self {
            TileRule::Constant(tree) => Ok(Some(tree)),
            TileRule::BySymbol(trees) => {
                let s = symbol.ok_or(TilingError::MissingTile { symbol })?;
                trees
                    .get(s as usize)
                    .map(Some)
                    .ok_or(TilingError::MissingTile { symbol })
            }
            _ => Ok(None),
        }
    }

    fn tile_id(&self, symbol: Option<Symbol>) -> String {
        match self {
            TileRule::ConstantTriangle { height } => format!("triangle:h={height}"),
            TileRule::TriangleBySymbol { heights } => {
                let h = symbol
                    .and_then(|s| heights.get(s as usize))
                    .copied()
                    .unwrap_or(0);
                format!("triangle:h={h}")
            }
            TileRule::Constant(tree) => tree.label(),
            TileRule::BySymbol(trees) => symbol
                .and_then(|s| trees.get(s as usize))
                .map_or_else(|| "?".into(), RightRootedTree::label),
        }
    }
}

/// Outcome of tiling one triangle at one point.
#[derive(Debug, Clone)]
pub struct TilingResult {
    /// Triangle height `N`.
    pub n: usize,
    /// Placed tiles: root word relative to the base point, and a tile id.
    /// Empty when coverage was evaluated by the phase recursion, which does
    /// not materialize placements.
    pub tiles: Vec<(Word, String)>,
    /// ρ-weight of covered words.
    pub covered_weight: f64,
    /// ρ-weight of the whole triangle (`N + 1` on a measure-preserving
    /// system up to float drift).
    pub total_weight: f64,
    /// `covered_weight / total_weight`.
    pub coverage: f64,
    /// Fraction of total weight left uncovered inside the outer band
    /// (uncovered words whose tile is not tall).
    pub untiled_band: f64,
    /// Fraction of total weight left uncovered at roots of tall tiles
    /// (height strictly above the assignment's band height).
    pub untiled_overflow: f64,
}

struct TriangleNode {
    word: Word,
    point: Point,
    weight: f64,
    children: Vec<(Symbol, usize)>,
    covered: bool,
}

/// Runs the greedy tiler on the materialized triangle `▷ᴺ·x`.
///
/// Levels are scanned from the root outward; within a level, words are
/// visited in lexicographic order. An uncovered word at level `n` receives
/// its tile exactly when `n + tile height ≤ N` — fitting is a height check
/// only. Placements are marked word by word with a disjointness assertion,
/// so an overlap (impossible for right-rooted tiles) would abort rather than
/// silently double-count.
pub fn greedy_tile(
    system: &dyn System,
    assignment: &TileAssignment,
    n: usize,
    x: &Point,
) -> Result<TilingResult, TilingError> {
    if x.depth() < assignment.locality() {
        return Err(SystemError::InsufficientDepth {
            required: assignment.locality(),
            available: x.depth(),
        }
        .into());
    }

    // Materialize the realizable triangle level by level.
    let mut nodes: Vec<TriangleNode> = vec![TriangleNode {
        word: Word::empty(),
        point: x.clone(),
        weight: 1.0,
        children: Vec::new(),
        covered: false,
    }];
    let mut levels: Vec<Vec<usize>> = vec![vec![0]];
    for _ in 0..n {
        let current = levels.last().expect("at least the root level").clone();
        let mut next = Vec::new();
        for idx in current {
            let set = system.preimages(&nodes[idx].point)?;
            for branch in &set.branches {
                let child = nodes.len();
                if child >= MAX_TRIANGLE_WORDS {
                    return Err(TilingError::TriangleTooLarge {
                        n,
                        cap: MAX_TRIANGLE_WORDS,
                    });
                }
                nodes.push(TriangleNode {
                    word: nodes[idx].word.prepend(branch.symbol),
                    point: branch.point.clone(),
                    weight: nodes[idx].weight * branch.weight,
                    children: Vec::new(),
                    covered: false,
                });
                nodes[idx].children.push((branch.symbol, child));
                next.push(child);
            }
        }
        // Parent-major generation is sorted by (inner word, symbol); the scan
        // order is lexicographic on coordinates, outermost first.
        next.sort_by(|&a, &b| nodes[a].word.cmp(&nodes[b].word));
        if next.is_empty() {
            break;
        }
        levels.push(next);
    }

    // Greedy scan and placement.
    let mut tiles = Vec::new();
    for (level, level_nodes) in levels.iter().enumerate() {
        for &idx in level_nodes {
            if nodes[idx].covered {
                continue;
            }
            let symbol = node_symbol(&nodes[idx], x);
            let height = assignment.height_for(symbol)?;
            if level + height > n {
                continue;
            }
            match assignment.rule().explicit_tree(symbol)? {
                None => mark_triangle(&mut nodes, idx, height),
                Some(tree) => mark_tree(&mut nodes, idx, tree),
            }
            tiles.push((nodes[idx].word.clone(), assignment.rule().tile_id(symbol)));
        }
    }

    // Weigh covered and uncovered words.
    let mut total = KahanSum::new();
    let mut covered = KahanSum::new();
    let mut band = KahanSum::new();
    let mut overflow = KahanSum::new();
    for (level, level_nodes) in levels.iter().enumerate() {
        for &idx in level_nodes {
            let node = &nodes[idx];
            total.add(node.weight);
            if node.covered {
                covered.add(node.weight);
            } else {
                let height = assignment.height_for(node_symbol(node, x))?;
                debug_assert!(level + height > n, "uncovered word with a fitting tile");
                if height > assignment.band_height() {
                    overflow.add(node.weight);
                } else {
                    band.add(node.weight);
                }
            }
        }
    }
    let total_weight = total.total();
    Ok(TilingResult {
        n,
        tiles,
        covered_weight: covered.total(),
        total_weight,
        coverage: covered.total() / total_weight,
        untiled_band: band.total() / total_weight,
        untiled_overflow: overflow.total() / total_weight,
    })
}

fn node_symbol(node: &TriangleNode, base: &Point) -> Option<Symbol> {
    node.word.outer_symbol().or_else(|| base.first_symbol())
}

/// Marks the full realizable subtree above `root` to the given depth.
fn mark_triangle(nodes: &mut [TriangleNode], root: usize, height: usize) {
    let mut stack = vec![(root, height)];
    while let Some((idx, left)) = stack.pop() {
        assert!(!nodes[idx].covered, "tiles must not overlap");
        nodes[idx].covered = true;
        if left > 0 {
            for &(_, child) in &nodes[idx].children.clone() {
                stack.push((child, left - 1));
            }
        }
    }
}

/// Marks the intersection of an explicit tile with the realizable subtree
/// above `root`, walking both trees in parallel by symbol.
fn mark_tree(nodes: &mut [TriangleNode], root: usize, tree: &RightRootedTree) {
    let mut stack = vec![(root, 0usize)];
    while let Some((idx, tile_idx)) = stack.pop() {
        assert!(!nodes[idx].covered, "tiles must not overlap");
        nodes[idx].covered = true;
        for &(symbol, tile_child) in tree.children_of(tile_idx) {
            if let Some(&(_, child)) = nodes[idx]
                .children
                .iter()
                .find(|&&(s, _)| s == symbol)
            {
                stack.push((child, tile_child));
            }
        }
    }
}

/// Exact greedy coverage for triangular assignments via the phase recursion.
///
/// Along each suffix chain the greedy outcome depends only on the chain
/// itself: a tile placed at an ancestor covers the next `h` levels of every
/// descendant, after which the first uncovered word tries its own tile.
/// Tracking the joint distribution of (remaining covered levels, outer
/// symbol) under the reversed transition kernel therefore reproduces the
/// materializing tiler's coverage exactly, in `O(N · states · max height)`
/// work.
fn triangle_phase_coverage(
    system: &MarkovShiftSystem,
    assignment: &TileAssignment,
    n: usize,
    x0: Symbol,
) -> Result<TilingResult, TilingError> {
    debug_assert!(assignment.is_triangular());
    let chain = system.chain();
    let states = chain
        .state_count()
        .expect("shift systems run on finite chains") as u32;

    // Joint mass over (cover debt after this level, outer symbol).
    let mut dist: HashMap<(usize, Symbol), f64> = HashMap::new();
    dist.insert((0, x0), 1.0);

    let mut total = KahanSum::new();
    let mut covered = KahanSum::new();
    let mut band = KahanSum::new();
    let mut overflow = KahanSum::new();

    for level in 0..=n {
        let mut after: HashMap<(usize, Symbol), f64> = HashMap::new();
        for (&(debt, symbol), &mass) in &dist {
            total.add(mass);
            let debt_after = if debt > 0 {
                covered.add(mass);
                debt - 1
            } else {
                let height = assignment.height_for(Some(symbol))?;
                if level + height <= n {
                    covered.add(mass);
                    height
                } else {
                    if height > assignment.band_height() {
                        overflow.add(mass);
                    } else {
                        band.add(mass);
                    }
                    0
                }
            };
            *after.entry((debt_after, symbol)).or_insert(0.0) += mass;
        }
        if level == n {
            break;
        }
        // Step outward: prepend a symbol with the reversed kernel
        // π(s)·P(s,t)/π(t).
        let mut next: HashMap<(usize, Symbol), f64> = HashMap::new();
        for (&(debt, t), &mass) in &after {
            let hold = chain.initial_probability(t);
            for s in 0..states {
                let step = chain.transition(s, t);
                if step > 0.0 {
                    let factor = chain.initial_probability(s) * step / hold;
                    *next.entry((debt, s)).or_insert(0.0) += mass * factor;
                }
            }
        }
        dist = next;
    }

    let total_weight = total.total();
    Ok(TilingResult {
        n,
        tiles: Vec::new(),
        covered_weight: covered.total(),
        total_weight,
        coverage: covered.total() / total_weight,
        untiled_band: band.total() / total_weight,
        untiled_overflow: overflow.total() / total_weight,
    })
}

/// Summary of a parameter sweep: the derived tiling depth and the per-point
/// coverages at that depth.
#[derive(Debug, Clone)]
pub struct TilingSweep {
    /// The requested coverage defect ε.
    pub epsilon: f64,
    /// Selected band height `L`: the empirical height threshold whose
    /// exceedance mass over the sampled points is at most ε²/2.
    pub band_height: usize,
    /// Triangle height `N = ⌈2L/ε⌉`.
    pub n: usize,
    /// Fraction of sampled points with coverage at least `1 − ε`.
    pub success_fraction: f64,
    /// The sampled points and their tiling outcomes.
    pub rows: Vec<(Point, TilingResult)>,
}

/// Chooses a tiling depth from ε and measures coverage across sampled
/// points.
///
/// The band height `L` is the smallest height whose exceedance frequency
/// among the sampled points' tiles is at most ε²/2, and the depth is
/// `N = ⌈2L/ε⌉`. Each sampled point is then tiled at depth `N` — via the
/// exact phase recursion for triangular assignments, or the materializing
/// tiler otherwise — and a point counts as a success when its coverage
/// reaches `1 − ε`.
pub fn tiling_parameter_sweep(
    system: &MarkovShiftSystem,
    assignment: &TileAssignment,
    epsilon: f64,
    sample_points: usize,
    seed: u64,
) -> Result<TilingSweep, TilingError> {
    assert!(
        epsilon > 0.0 && epsilon < 1.0,
        "coverage defect must be in (0, 1)"
    );
    assert!(sample_points > 0, "need at least one sampled point");

    let depth = assignment.locality().max(1);
    let mut points = Vec::with_capacity(sample_points);
    for i in 0..sample_points {
        let mut rng = ChaCha8Rng::seed_from_u64(subseed(seed, i as u64));
        points.push(system.sample_point(&mut rng, depth));
    }

    let mut heights = Vec::with_capacity(points.len());
    for point in &points {
        heights.push(assignment.height_for(point.first_symbol())?);
    }
    let max_height = heights.iter().copied().max().unwrap_or(0);
    let allowed = epsilon * epsilon / 2.0 * heights.len() as f64;
    let band_height = (0..=max_height)
        .find(|&l| heights.iter().filter(|&&h| h > l).count() as f64 <= allowed)
        .unwrap_or(max_height);
    let n = (2.0 * band_height as f64 / epsilon).ceil() as usize;

    let classified = assignment.clone().with_band_height(band_height);
    let mut rows = Vec::with_capacity(points.len());
    let mut successes = 0usize;
    for point in points {
        let result = if classified.is_triangular() {
            let x0 = point
                .first_symbol()
                .expect("sampled shift points carry a prefix");
            triangle_phase_coverage(system, &classified, n, x0)?
        } else {
            greedy_tile(system, &classified, n, &point)?
        };
        if result.coverage >= 1.0 - epsilon {
            successes += 1;
        }
        rows.push((point, result));
    }
    Ok(TilingSweep {
        epsilon,
        band_height,
        n,
        success_fraction: successes as f64 / rows.len() as f64,
        rows,
    })
}
