//! Countable-to-one measure-preserving systems behind a uniform interface.
//!
//! A [`System`] exposes a point space, the forward map `T`, and — the heart
//! of everything downstream — *weighted preimage enumeration*: for a point
//! `x`, [`System::preimages`] lists branches `y` with `T(y) = x` together
//! with their relative weights `ρ(y, x)`. The weights of a full preimage
//! set sum to one (countably-branching systems report the truncated tail
//! explicitly), which is what makes tree-indexed averages of an observable
//! converge to its invariant mean.
//!
//! The catalog spans four shapes of dynamics:
//!
//! * shifts on sequence spaces driven by a stationary Markov chain,
//!   including independent (Bernoulli) alphabets, free-group boundaries
//!   where the shift undoes the outermost generator, and a deliberately
//!   reducible two-block chain whose averages converge to per-block means
//!   ([`shift`]);
//! * the continued-fraction map on `(0,1]` with its countable inverse
//!   branches, truncated at a declared cap with an exact analytic tail
//!   ([`gauss`]);
//! * a skew product pairing a circle-rotation action of a free group with
//!   its boundary shift, which converts forward averages over group balls
//!   into backward averages of a single transformation ([`skew`]);
//! * the boundary shift of an infinite-rank free group, with stationary
//!   masses estimated from return times under a declared generator budget
//!   ([`finfty`]).
//!
//! Points carry explicit finite information: a shift-space point is its
//! known coordinate prefix, and operations that would need more
//! coordinates fail with [`SystemError::InsufficientDepth`] rather than
//! extending the prefix behind the caller's back.

pub mod catalog;
pub mod finfty;
pub mod gauss;
pub mod shift;
pub mod skew;

use std::fmt;

use rand::RngCore;
use thiserror::Error;

use crate::words::{Alphabet, Symbol, Word};

pub use catalog::{catalog_ids, system_by_id};
pub use finfty::{finfty_boundary_system, FinftyBoundarySystem};
pub use gauss::{gauss_system, GaussSystem};
pub use shift::{
    bernoulli_system, block_chain_system, boundary_system, markov_shift_system,
    MarkovShiftSystem, TargetMode,
};
pub use skew::{
    circle_rotation_action, skew_product_system, CircleRotationAction, GroupAction,
    SkewProductSystem,
};

/// Errors from system construction, point handling, and evaluation.
#[derive(Debug, Error, PartialEq)]
pub enum SystemError {
    /// A point's prefix is shorter than the operation requires.
    #[error("point prefix of depth {available} is too shallow (need {required})")]
    InsufficientDepth {
        /// Depth the operation needs.
        required: usize,
        /// Depth the point has.
        available: usize,
    },
    /// The chain's initial distribution is not stationary, so the shift it
    /// drives does not preserve its measure.
    #[error("initial distribution is not stationary; the shift would not be measure-preserving")]
    NotMeasurePreserving,
    /// The chain permits an immediate-cancellation transition and therefore
    /// does not live on a free-group boundary.
    #[error("chain allows a generator to be followed by its inverse; not supported on a boundary")]
    NotBoundarySupported,
    /// A real point is outside the valid domain.
    #[error("point outside domain: {0}")]
    DomainError(String),
    /// Components were built over incompatible alphabets.
    #[error("alphabet mismatch: {0}")]
    InvalidAlphabet(String),
    /// The operation received a point of the wrong representation.
    #[error("expected a {expected} point")]
    WrongPointKind {
        /// The representation the system works with.
        expected: &'static str,
    },
    /// The system cannot evaluate this observable.
    #[error("system {system} cannot evaluate observable {observable}")]
    UnsupportedObservable {
        /// System id.
        system: String,
        /// Observable name.
        observable: String,
    },
    /// No system with this id exists in the catalog.
    #[error("unknown system id {0:?}")]
    UnknownSystem(String),
}

/// A point of a system's space, carrying exactly the information the
/// caller requested when sampling it.
#[derive(Debug, Clone, PartialEq)]
pub enum Point {
    /// A shift-space point known through its first coordinates.
    Symbolic {
        /// Known prefix, coordinate 0 first.
        prefix: Word,
    },
    /// A number in `(0,1]`, irrational as far as double precision can tell.
    Real {
        /// The value.
        value: f64,
    },
    /// A point of a product space: circle coordinate plus shift fiber.
    Product {
        /// Base coordinate in `[0,1)`.
        base: f64,
        /// Fiber prefix, coordinate 0 first.
        fiber: Word,
    },
}

/// Number of continued-fraction digits examined before a real point is
/// believed to be irrational.
const CF_DIGIT_LIMIT: usize = 64;
/// A continued-fraction remainder at most this is treated as terminated.
const CF_REMAINDER_TOL: f64 = 1e-14;

impl Point {
    /// A shift-space point from its coordinate prefix.
    #[must_use]
    pub fn symbolic(prefix: Word) -> Self {
        Point::Symbolic { prefix }
    }

    /// A validated real point: must lie in `(0,1]` and must not have a
    /// continued-fraction expansion that terminates within 64 digits
    /// (rational values make the continued-fraction dynamics degenerate).
    pub fn real_checked(value: f64) -> Result<Self, SystemError> {
        if !(value > 0.0 && value <= 1.0) || !value.is_finite() {
            return Err(SystemError::DomainError(format!(
                "{value} is outside (0, 1]"
            )));
        }
        let mut r = value;
        for _ in 0..CF_DIGIT_LIMIT {
            if r <= CF_REMAINDER_TOL {
                return Err(SystemError::DomainError(format!(
                    "{value} has a terminating continued fraction"
                )));
            }
            let inv = 1.0 / r;
            r = inv - inv.floor();
        }
        Ok(Point::Real { value })
    }

    /// A product-space point.
    #[must_use]
    pub fn product(base: f64, fiber: Word) -> Self {
        Point::Product { base, fiber }
    }

    /// Depth of the known prefix; real points carry full information.
    #[must_use]
    pub fn depth(&self) -> usize {
        match self {
            Point::Symbolic { prefix } => prefix.len(),
            Point::Real { .. } => usize::MAX,
            Point::Product { fiber, .. } => fiber.len(),
        }
    }

    /// The symbolic prefix (fiber prefix for product points), if any.
    #[must_use]
    pub fn prefix_word(&self) -> Option<&Word> {
        match self {
            Point::Symbolic { prefix } => Some(prefix),
            Point::Real { .. } => None,
            Point::Product { fiber, .. } => Some(fiber),
        }
    }

    /// First known coordinate of the (fiber) prefix.
    #[must_use]
    pub fn first_symbol(&self) -> Option<Symbol> {
        self.prefix_word().and_then(Word::outer_symbol)
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Point::Symbolic { prefix } => write!(f, "[{prefix}]"),
            Point::Real { value } => write!(f, "{value}"),
            Point::Product { base, fiber } => write!(f, "({base}, [{fiber}])"),
        }
    }
}

/// One weighted inverse branch of the forward map at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct PreimageBranch {
    /// Index of the right-inverse applied (a symbol of the system's
    /// alphabet).
    pub symbol: Symbol,
    /// The preimage point; applying the forward map returns to the source.
    pub point: Point,
    /// Relative weight `ρ(point, x) > 0`.
    pub weight: f64,
}

/// All enumerated inverse branches at a point, plus the weight mass not
/// represented because of truncation (zero for finite branching).
#[derive(Debug, Clone, PartialEq)]
pub struct PreimageSet {
    /// Branches sorted by symbol.
    pub branches: Vec<PreimageBranch>,
    /// Weight not covered by `branches`.
    pub tail: f64,
}

impl PreimageSet {
    /// Total enumerated weight.
    #[must_use]
    pub fn enumerated_weight(&self) -> f64 {
        self.branches.iter().map(|b| b.weight).sum()
    }

    /// The branch for `symbol`, if it exists.
    #[must_use]
    pub fn branch_for(&self, symbol: Symbol) -> Option<&PreimageBranch> {
        self.branches
            .binary_search_by_key(&symbol, |b| b.symbol)
            .ok()
            .map(|i| &self.branches[i])
    }
}

/// Closed-form functions on `(0,1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContinuousKind {
    /// `x ↦ x`.
    Identity,
}

/// Closed-form functions of the base coordinate of a product system.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaseFunction {
    /// `θ ↦ cos 2πθ`, with Lebesgue mean zero.
    CosineWave,
}

/// A real-valued observable.
#[derive(Debug, Clone, PartialEq)]
pub enum Observable {
    /// A function of the first `depth` coordinates of a shift-space point,
    /// tabulated densely: the value at prefix `w` sits at the radix index
    /// `Σ wᵢ·kᵈ⁻¹⁻ⁱ` with `k = alphabet_size`. Depth 0 is a constant.
    Cylinder {
        /// Number of coordinates read.
        depth: usize,
        /// Radix of the index encoding.
        alphabet_size: usize,
        /// `alphabet_size.pow(depth)` values.
        values: Vec<f64>,
        /// Display name for reports.
        name: String,
    },
    /// A closed-form function on `(0,1]`.
    Continuous {
        /// Which function.
        kind: ContinuousKind,
    },
    /// A function of the base coordinate of a product point.
    BaseLift {
        /// Which function.
        kind: BaseFunction,
    },
}

impl Observable {
    /// The constant observable `f ≡ c`, evaluable on every system.
    #[must_use]
    pub fn constant(c: f64) -> Self {
        Observable::Cylinder {
            depth: 0,
            alphabet_size: 1,
            values: vec![c],
            name: format!("const({c})"),
        }
    }

    /// The indicator of the first coordinate being `symbol`, over a
    /// `k`-symbol alphabet.
    ///
    /// # Panics
    /// Panics if `symbol` is outside the alphabet.
    #[must_use]
    pub fn indicator_first_symbol(k: usize, symbol: Symbol) -> Self {
        assert!((symbol as usize) < k, "symbol outside alphabet");
        let mut values = vec![0.0; k];
        values[symbol as usize] = 1.0;
        Observable::Cylinder {
            depth: 1,
            alphabet_size: k,
            values,
            name: format!("ind(x0={symbol})"),
        }
    }

    /// A depth-1 cylinder function given by one value per symbol.
    ///
    /// # Panics
    /// Panics if `values` is empty.
    #[must_use]
    pub fn by_first_symbol(values: Vec<f64>, name: impl Into<String>) -> Self {
        assert!(!values.is_empty(), "need one value per symbol");
        Observable::Cylinder {
            depth: 1,
            alphabet_size: values.len(),
            values,
            name: name.into(),
        }
    }

    /// A general cylinder function of the first `depth` coordinates.
    ///
    /// # Panics
    /// Panics if `values` does not hold exactly `k^depth` entries.
    #[must_use]
    pub fn cylinder(k: usize, depth: usize, values: Vec<f64>, name: impl Into<String>) -> Self {
        assert_eq!(
            values.len(),
            k.pow(depth as u32),
            "need k^depth tabulated values"
        );
        Observable::Cylinder {
            depth,
            alphabet_size: k,
            values,
            name: name.into(),
        }
    }

    /// The identity function `x ↦ x` on `(0,1]`.
    #[must_use]
    pub fn real_identity() -> Self {
        Observable::Continuous {
            kind: ContinuousKind::Identity,
        }
    }

    /// The base-coordinate wave `θ ↦ cos 2πθ`.
    #[must_use]
    pub fn base_cosine() -> Self {
        Observable::BaseLift {
            kind: BaseFunction::CosineWave,
        }
    }

    /// Number of prefix coordinates the observable reads.
    #[must_use]
    pub fn depth(&self) -> usize {
        match self {
            Observable::Cylinder { depth, .. } => *depth,
            Observable::Continuous { .. } | Observable::BaseLift { .. } => 0,
        }
    }

    /// Display name for reports.
    #[must_use]
    pub fn name(&self) -> String {
        match self {
            Observable::Cylinder { name, .. } => name.clone(),
            Observable::Continuous {
                kind: ContinuousKind::Identity,
            } => "x".into(),
            Observable::BaseLift {
                kind: BaseFunction::CosineWave,
            } => "cos2pi".into(),
        }
    }

    /// Looks up the tabulated value at a prefix (cylinder observables
    /// only). The prefix must be at least `depth` symbols long.
    pub(crate) fn cylinder_value(&self, prefix: &Word) -> Result<f64, SystemError> {
        let Observable::Cylinder {
            depth,
            alphabet_size,
            values,
            ..
        } = self
        else {
            unreachable!("cylinder_value called on a non-cylinder observable");
        };
        if prefix.len() < *depth {
            return Err(SystemError::InsufficientDepth {
                required: *depth,
                available: prefix.len(),
            });
        }
        let mut index = 0usize;
        for &s in &prefix.symbols()[..*depth] {
            index = index * alphabet_size + s as usize;
        }
        Ok(values[index])
    }

    /// Mean of a cylinder observable under the measure of `chain`
    /// (stationary chains make this the integral of the observable).
    pub(crate) fn chain_mean(&self, chain: &crate::markov::MarkovChain) -> Option<f64> {
        let Observable::Cylinder {
            depth,
            alphabet_size,
            values,
            ..
        } = self
        else {
            return None;
        };
        if *depth == 0 {
            return Some(values[0]);
        }
        let k = *alphabet_size;
        let mut total = 0.0;
        let mut digits = vec![0 as Symbol; *depth];
        loop {
            let w = Word::new(digits.clone());
            let mut index = 0usize;
            for &s in w.symbols() {
                index = index * k + s as usize;
            }
            total += values[index] * chain.cylinder_measure(&w);
            // Advance the radix counter, most significant digit first.
            let mut pos = *depth;
            loop {
                if pos == 0 {
                    return Some(total);
                }
                pos -= 1;
                digits[pos] += 1;
                if (digits[pos] as usize) < k {
                    break;
                }
                digits[pos] = 0;
            }
        }
    }
}

/// The uniform interface to a countable-to-one measure-preserving system.
pub trait System: Send + Sync {
    /// Stable identifier, usable in configs and reports.
    fn id(&self) -> String;

    /// The symbol alphabet indexing inverse branches (and, for shift
    /// systems, the coordinates of points).
    fn alphabet(&self) -> Alphabet;

    /// The forward map `T`.
    fn apply_t(&self, x: &Point) -> Result<Point, SystemError>;

    /// All (enumerated) inverse branches of `T` at `x` with their weights,
    /// sorted by symbol, plus any truncated tail weight.
    fn preimages(&self, x: &Point) -> Result<PreimageSet, SystemError>;

    /// Samples a point with a prefix of (at least) the requested depth.
    /// Deterministic in the generator state.
    fn sample_point(&self, rng: &mut dyn RngCore, depth: usize) -> Point;

    /// Evaluates an observable at a point.
    fn evaluate(&self, f: &Observable, x: &Point) -> Result<f64, SystemError>;

    /// The analytic limit of averages of `f` started at `x`, when known:
    /// the integral of `f` for ergodic systems, the conditional mean given
    /// the invariant component of `x` otherwise.
    fn invariant_target(&self, f: &Observable, x: &Point) -> Option<f64>;
}
