//! Shifts on sequence spaces driven by a stationary Markov chain.
//!
//! The forward map drops the first coordinate; the inverse branches of a
//! point `x` prepend a symbol `i` with `P(i, x₀) > 0` and carry weight
//! `π(i)·P(i, x₀)/π(x₀)` — the ratio of the cylinder measures of `i⌢x`
//! and `x`. Stationarity of `π` is what makes these weights sum to one
//! and the shift measure-preserving, so construction refuses
//! non-stationary chains outright.
//!
//! Free-group boundaries arrive as the special case where the alphabet
//! carries the inverse involution and the chain forbids immediate
//! cancellation: points are infinite reduced words, and prepending
//! admissible symbols never creates a cancellation. The boundary systems
//! additionally expose the forward group action by reduced concatenation;
//! since undoing one generator is exactly the shift, forward averages over
//! balls coincide with backward shift averages.

use rand::RngCore;

use crate::markov::MarkovChain;
use crate::words::{Alphabet, Word};

use super::{Observable, Point, PreimageBranch, PreimageSet, System, SystemError};

/// How a shift system resolves the analytic limit of its averages.
#[derive(Debug, Clone, PartialEq)]
pub enum TargetMode {
    /// The chain is irreducible: the limit is the integral of the
    /// observable under the chain measure.
    ErgodicMean,
    /// The chain decomposes into closed blocks of states: the limit at a
    /// point is the observable's conditional mean given the block of the
    /// first coordinate.
    BlockMeans(Vec<Vec<crate::words::Symbol>>),
    /// No analytic limit is published.
    None,
}

/// A measure-preserving shift driven by a stationary Markov chain.
#[derive(Debug, Clone)]
pub struct MarkovShiftSystem {
    chain: MarkovChain,
    alphabet: Alphabet,
    id: String,
    target_mode: TargetMode,
}

/// The shift over `k` independent uniform symbols.
///
/// # Panics
/// Panics if `k < 2`.
#[must_use]
pub fn bernoulli_system(k: usize) -> MarkovShiftSystem {
    assert!(k >= 2, "need at least two symbols");
    let chain = MarkovChain::uniform_bernoulli(k).expect("uniform chain is valid");
    MarkovShiftSystem {
        chain,
        alphabet: Alphabet::plain(k),
        id: format!("bernoulli:{k}"),
        target_mode: TargetMode::ErgodicMean,
    }
}

/// The shift driven by an arbitrary stationary chain, identified as
/// `markov:<name>` in reports.
///
/// # Errors
/// [`SystemError::NotMeasurePreserving`] when the chain's initial
/// distribution is not stationary.
pub fn markov_shift_system(
    chain: MarkovChain,
    name: &str,
) -> Result<MarkovShiftSystem, SystemError> {
    if !chain.is_stationary() {
        return Err(SystemError::NotMeasurePreserving);
    }
    let k = chain
        .state_count()
        .expect("finite chain required for a plain shift");
    let target_mode = if chain.matrix().is_irreducible() {
        TargetMode::ErgodicMean
    } else {
        TargetMode::None
    };
    Ok(MarkovShiftSystem {
        chain,
        alphabet: Alphabet::plain(k),
        id: format!("markov:{name}"),
        target_mode,
    })
}

/// The boundary shift of the rank-`r` free group under a stationary chain
/// on its `2r` symmetric generators.
///
/// # Errors
/// [`SystemError::NotBoundarySupported`] when the chain allows a generator
/// to be followed by its inverse (such sequences are not reduced words);
/// [`SystemError::NotMeasurePreserving`] for non-stationary chains;
/// [`SystemError::InvalidAlphabet`] when the chain's state count is not
/// `2r`.
pub fn boundary_system(
    r: usize,
    chain: MarkovChain,
    name: &str,
) -> Result<MarkovShiftSystem, SystemError> {
    let alphabet = Alphabet::free_group(r);
    if chain.state_count() != Some(2 * r) {
        return Err(SystemError::InvalidAlphabet(format!(
            "chain has {:?} states, boundary needs {}",
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
    Ok(MarkovShiftSystem {
        chain,
        alphabet,
        id: format!("boundary:r={r}:{name}"),
        target_mode: TargetMode::ErgodicMean,
    })
}

/// A deliberately non-ergodic shift: four symbols in two closed two-state
/// blocks `{0,1}` and `{2,3}`, each carrying half the mass. Averages
/// converge to the observable's mean within the block of the starting
/// coordinate, exercising conditional-expectation targets.
#[must_use]
pub fn block_chain_system() -> MarkovShiftSystem {
    MarkovShiftSystem {
        chain: MarkovChain::two_block(),
        alphabet: Alphabet::plain(4),
        id: "blocks".into(),
        target_mode: TargetMode::BlockMeans(vec![vec![0, 1], vec![2, 3]]),
    }
}

impl MarkovShiftSystem {
    /// The driving chain.
    #[must_use]
    pub fn chain(&self) -> &MarkovChain {
        &self.chain
    }

    /// How targets are resolved.
    #[must_use]
    pub fn target_mode(&self) -> &TargetMode {
        &self.target_mode
    }

    /// The forward group action `w · x` by reduced concatenation, for
    /// boundary systems: letters of `w` are applied root-adjacent first,
    /// cancelling against the point's outermost coordinate when inverse.
    ///
    /// # Errors
    /// [`SystemError::InvalidAlphabet`] when the alphabet carries no
    /// involution; [`SystemError::WrongPointKind`] for non-symbolic points.
    pub fn group_act(&self, w: &Word, x: &Point) -> Result<Point, SystemError> {
        if !self.alphabet.has_involution() {
            return Err(SystemError::InvalidAlphabet(
                "group action needs an involution alphabet".into(),
            ));
        }
        let Point::Symbolic { prefix } = x else {
            return Err(SystemError::WrongPointKind {
                expected: "symbolic",
            });
        };
        let mut acted = prefix.clone();
        for &s in w.symbols().iter().rev() {
            acted = acted.prepend_reduced(s, &self.alphabet);
        }
        Ok(Point::symbolic(acted))
    }

    fn prefix_of<'p>(&self, x: &'p Point) -> Result<&'p Word, SystemError> {
        match x {
            Point::Symbolic { prefix } => Ok(prefix),
            _ => Err(SystemError::WrongPointKind {
                expected: "symbolic",
            }),
        }
    }
}

impl System for MarkovShiftSystem {
    fn id(&self) -> String {
        self.id.clone()
    }

    fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    fn apply_t(&self, x: &Point) -> Result<Point, SystemError> {
        let prefix = self.prefix_of(x)?;
        let shifted = prefix
            .parent()
            .ok_or(SystemError::InsufficientDepth {
                required: 1,
                available: 0,
            })?;
        Ok(Point::symbolic(shifted))
    }

    fn preimages(&self, x: &Point) -> Result<PreimageSet, SystemError> {
        let prefix = self.prefix_of(x)?;
        let x0 = prefix.outer_symbol().ok_or(SystemError::InsufficientDepth {
            required: 1,
            available: 0,
        })?;
        let pi_x0 = self.chain.initial_probability(x0);
        let mut branches = Vec::with_capacity(self.alphabet.size());
        for i in self.alphabet.symbols() {
            let p = self.chain.transition(i, x0);
            if p > 0.0 {
                branches.push(PreimageBranch {
                    symbol: i,
                    point: Point::symbolic(prefix.prepend(i)),
                    weight: self.chain.initial_probability(i) * p / pi_x0,
                });
            }
        }
        Ok(PreimageSet {
            branches,
            tail: 0.0,
        })
    }

    fn sample_point(&self, rng: &mut dyn RngCore, depth: usize) -> Point {
        Point::symbolic(self.chain.sample_path_with(depth.max(1), rng))
    }

    fn evaluate(&self, f: &Observable, x: &Point) -> Result<f64, SystemError> {
        match f {
            Observable::Cylinder { .. } => f.cylinder_value(self.prefix_of(x)?),
            _ => Err(SystemError::UnsupportedObservable {
                system: self.id(),
                observable: f.name(),
            }),
        }
    }

    fn invariant_target(&self, f: &Observable, x: &Point) -> Option<f64> {
        match &self.target_mode {
            TargetMode::ErgodicMean => f.chain_mean(&self.chain),
            TargetMode::BlockMeans(blocks) => {
                if f.depth() == 0 {
                    return f.chain_mean(&self.chain);
                }
                let x0 = x.first_symbol()?;
                let block = blocks.iter().find(|b| b.contains(&x0))?;
                // Conditional mean given the block: restrict the integral
                // to words starting inside the block and renormalize by
                // the block's mass.
                let Observable::Cylinder {
                    depth,
                    alphabet_size,
                    values,
                    ..
                } = f
                else {
                    return None;
                };
                let block_mass: f64 = block
                    .iter()
                    .map(|&i| self.chain.initial_probability(i))
                    .sum();
                let mut digits = vec![0 as crate::words::Symbol; *depth];
                let mut total = 0.0;
                loop {
                    if block.contains(&digits[0]) {
                        let w = Word::new(digits.clone());
                        let mut index = 0usize;
                        for &s in w.symbols() {
                            index = index * alphabet_size + s as usize;
                        }
                        total += values[index] * self.chain.cylinder_measure(&w);
                    }
                    let mut pos = *depth;
                    loop {
                        if pos == 0 {
                            return Some(total / block_mass);
                        }
                        pos -= 1;
                        digits[pos] += 1;
                        if (digits[pos] as usize) < *alphabet_size {
                            break;
                        }
                        digits[pos] = 0;
                    }
                }
            }
            TargetMode::None => None,
        }
    }
}
