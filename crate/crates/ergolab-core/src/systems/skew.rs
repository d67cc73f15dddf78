//! Skew products over free-group boundaries, converting forward group
//! averages into backward averages of a single transformation.
//!
//! Given a measure-preserving action of the rank-`r` free group on a base
//! space and the boundary shift driven by a stationary chain on the `2r`
//! symmetric generators, the product map
//!
//! ```text
//! T(x, y) = (y₀⁻¹ · x, shift(y))
//! ```
//!
//! undoes the outermost generator of the fiber on the base. Its inverse
//! branches prepend an admissible generator `i` to the fiber while moving
//! the base by `i`, with the same weight `π(i)·P(i, y₀)/π(y₀)` as the
//! underlying boundary shift — the weight does not depend on the base
//! coordinate, which is exactly why sums of `f(w·x)·ℙ(w)` over a
//! right-rooted word tree equal weighted backward sums over this single
//! transformation.
//!
//! The concrete base action shipped here is by circle rotations: generator
//! `i` translates by a fixed irrational angle, its inverse translates
//! back. Rotations preserve Lebesgue measure, and for generic angles the
//! action is ergodic, giving analytic targets for base observables.

use rand::RngCore;

use crate::markov::MarkovChain;
use crate::words::{Alphabet, Symbol, Word};

use super::{BaseFunction, Observable, Point, PreimageBranch, PreimageSet, System, SystemError};

/// A measure-preserving action of a free group on the unit circle `[0,1)`,
/// presented through per-generator invertible maps.
pub trait GroupAction: Send + Sync {
    /// Rank of the acting free group.
    fn rank(&self) -> usize;

    /// Applies one generator (symbol `2i` is the `i`-th generator, `2i+1`
    /// its inverse).
    fn apply_symbol(&self, s: Symbol, x: f64) -> f64;

    /// Applies a word, outermost letter last, so that
    /// `(uv)·x = u·(v·x)`.
    fn apply_word(&self, w: &Word, x: f64) -> f64 {
        let mut y = x;
        for &s in w.symbols().iter().rev() {
            y = self.apply_symbol(s, y);
        }
        y
    }
}

/// Rotation action: generator `i` translates the circle by `angles[i]`.
#[derive(Debug, Clone)]
pub struct CircleRotationAction {
    angles: Vec<f64>,
}

/// A circle-rotation action of the rank-`r` free group with one irrational
/// angle per generator.
///
/// # Panics
/// Panics if `angles` is empty.
#[must_use]
pub fn circle_rotation_action(angles: Vec<f64>) -> CircleRotationAction {
    assert!(!angles.is_empty(), "need at least one angle");
    CircleRotationAction { angles }
}

impl CircleRotationAction {
    /// Default angle family: fractional parts of square roots of primes
    /// (`√2−1`, `√3−1`, `√5−2`, ...), all irrational.
    ///
    /// # Panics
    /// Panics if `rank` exceeds the built-in prime list (16 entries).
    #[must_use]
    pub fn standard(rank: usize) -> Self {
        const PRIMES: [u32; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];
        assert!(rank >= 1 && rank <= PRIMES.len(), "rank out of range");
        let angles = PRIMES[..rank]
            .iter()
            .map(|&p| {
                let r = f64::from(p).sqrt();
                r - r.floor()
            })
            .collect();
        CircleRotationAction { angles }
    }

    /// The translation angles, one per generator.
    #[must_use]
    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    /// Largest rank [`standard`](Self::standard) accepts.
    #[must_use]
    pub fn max_standard_rank() -> usize {
        16
    }
}

impl GroupAction for CircleRotationAction {
    fn rank(&self) -> usize {
        self.angles.len()
    }

    fn apply_symbol(&self, s: Symbol, x: f64) -> f64 {
        let angle = self.angles[(s / 2) as usize];
        let moved = if s.is_multiple_of(2) { x + angle } else { x - angle };
        moved.rem_euclid(1.0)
    }
}

/// The skew product of a group action with its boundary shift.
pub struct SkewProductSystem {
    action: Box<dyn GroupAction>,
    chain: MarkovChain,
    alphabet: Alphabet,
    id: String,
}

impl std::fmt::Debug for SkewProductSystem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SkewProductSystem")
            .field("id", &self.id)
            .field("alphabet", &self.alphabet)
            .finish_non_exhaustive()
    }
}

/// Builds the skew product of `action` with the boundary shift driven by
/// `chain`; `label` goes into the system id (`skew:<label>:r=<rank>`).
///
/// # Errors
/// [`SystemError::InvalidAlphabet`] when the chain's state count is not
/// twice the action's rank; [`SystemError::NotBoundarySupported`] when the
/// chain allows immediate cancellation; and
/// [`SystemError::NotMeasurePreserving`] for non-stationary chains.
pub fn skew_product_system(
    action: Box<dyn GroupAction>,
    chain: MarkovChain,
    label: &str,
) -> Result<SkewProductSystem, SystemError> {
    let r = action.rank();
    let alphabet = Alphabet::free_group(r);
    if chain.state_count() != Some(2 * r) {
        return Err(SystemError::InvalidAlphabet(format!(
            "chain has {:?} states, the rank-{r} action needs {}",
            chain.state_count(),
            2 * r
        )));
    }
    for s in alphabet.symbols() {
        if chain.transition(s, s ^ 1) != 0.0 {
            return Err(SystemError::NotBoundarySupported);
        }
    }
    if !chain.is_stationary() {
        return Err(SystemError::NotMeasurePreserving);
    }
    Ok(SkewProductSystem {
        action,
        chain,
        alphabet,
        id: format!("skew:{label}:r={r}"),
    })
}

impl SkewProductSystem {
    /// The acting group's base maps.
    #[must_use]
    pub fn action(&self) -> &dyn GroupAction {
        self.action.as_ref()
    }

    /// The fiber chain.
    #[must_use]
    pub fn chain(&self) -> &MarkovChain {
        &self.chain
    }

    fn parts_of<'p>(&self, x: &'p Point) -> Result<(f64, &'p Word), SystemError> {
        match x {
            Point::Product { base, fiber } => Ok((*base, fiber)),
            _ => Err(SystemError::WrongPointKind {
                expected: "product",
            }),
        }
    }
}

impl System for SkewProductSystem {
    fn id(&self) -> String {
        self.id.clone()
    }

    fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    fn apply_t(&self, x: &Point) -> Result<Point, SystemError> {
        let (base, fiber) = self.parts_of(x)?;
        let y0 = fiber.outer_symbol().ok_or(SystemError::InsufficientDepth {
            required: 1,
            available: 0,
        })?;
        let inverse = self
            .alphabet
            .inverse(y0)
            .expect("free-group alphabet has an involution");
        Ok(Point::Product {
            base: self.action.apply_symbol(inverse, base),
            fiber: fiber.parent().expect("outer symbol implies non-empty"),
        })
    }

    fn preimages(&self, x: &Point) -> Result<PreimageSet, SystemError> {
        let (base, fiber) = self.parts_of(x)?;
        let y0 = fiber.outer_symbol().ok_or(SystemError::InsufficientDepth {
            required: 1,
            available: 0,
        })?;
        let pi_y0 = self.chain.initial_probability(y0);
        let mut branches = Vec::with_capacity(self.alphabet.size());
        for i in self.alphabet.symbols() {
            let p = self.chain.transition(i, y0);
            if p > 0.0 {
                branches.push(PreimageBranch {
                    symbol: i,
                    point: Point::Product {
                        base: self.action.apply_symbol(i, base),
                        fiber: fiber.prepend(i),
                    },
                    weight: self.chain.initial_probability(i) * p / pi_y0,
                });
            }
        }
        Ok(PreimageSet {
            branches,
            tail: 0.0,
        })
    }

    fn sample_point(&self, rng: &mut dyn RngCore, depth: usize) -> Point {
        let base: f64 = rand::Rng::gen(rng);
        let fiber = self.chain.sample_path_with(depth.max(1), rng);
        Point::Product { base, fiber }
    }

    fn evaluate(&self, f: &Observable, x: &Point) -> Result<f64, SystemError> {
        let (base, fiber) = self.parts_of(x)?;
        match f {
            Observable::BaseLift {
                kind: BaseFunction::CosineWave,
            } => Ok((std::f64::consts::TAU * base).cos()),
            Observable::Cylinder { .. } => f.cylinder_value(fiber),
            Observable::Continuous { .. } => Err(SystemError::UnsupportedObservable {
                system: self.id(),
                observable: f.name(),
            }),
        }
    }

    fn invariant_target(&self, f: &Observable, _x: &Point) -> Option<f64> {
        match f {
            // Lebesgue mean of the cosine wave over one period.
            Observable::BaseLift {
                kind: BaseFunction::CosineWave,
            } => Some(0.0),
            Observable::Cylinder { .. } if self.chain.matrix().is_irreducible() => {
                f.chain_mean(&self.chain)
            }
            _ => None,
        }
    }
}
