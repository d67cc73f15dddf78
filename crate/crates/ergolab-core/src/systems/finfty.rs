//! The boundary shift of an infinite-rank free group.
//!
//! The driving chain is the built-in countable-state walk
//! ([`MarkovChain::finfty_chain`]): geometrically distributed steps over
//! the non-cancelling generators. The chain is positive recurrent, so a
//! stationary distribution exists, but it has no usable closed form beyond
//! `π(i) = 1/𝔼ᵢτᵢ` — so this system estimates the stationary masses by
//! simulating return times for every symbol below a declared *generator
//! budget* and restricts itself to points whose prefixes only use those
//! symbols (sampled prefixes touching rarer generators are redrawn; their
//! total initial-distribution mass, `2^{−budget}`, is available from
//! [`FinftyBoundarySystem::excluded_initial_mass`]).
//!
//! Because the branch weights are Monte Carlo estimates, preimage weights
//! here carry statistical noise of order `1/√samples` rather than the
//! crate's usual `1e−12` exactness; the reported tail absorbs both the
//! out-of-budget mass and that noise. Exact identities are therefore
//! checked on the finite-rank boundaries, and this system serves the
//! return-time and sampling experiments.

use rand::RngCore;

use crate::markov::{MarkovChain, MarkovError, DEFAULT_RETURN_HORIZON};
use crate::numeric::subseed;
use crate::words::{Alphabet, Word};

use super::{Observable, Point, PreimageBranch, PreimageSet, System, SystemError};

/// Boundary shift over the countable-generator walk, truncated to a
/// generator budget.
#[derive(Debug, Clone)]
pub struct FinftyBoundarySystem {
    chain: MarkovChain,
    /// Number of usable symbols (an even count: generators come in
    /// inverse pairs).
    budget: usize,
    /// Monte Carlo estimates of the stationary masses of symbols
    /// `0..budget`.
    pi: Vec<f64>,
    mc_samples: usize,
}

/// Builds the truncated infinite-rank boundary: stationary masses for the
/// first `generator_budget` symbols are estimated from `mc_samples`
/// simulated return times each, deterministically in `seed`.
///
/// # Errors
/// Propagates [`MarkovError`] when a return-time simulation observes no
/// return (which would indicate a horizon far too small).
///
/// # Panics
/// Panics if `generator_budget` is odd or less than 2, or `mc_samples`
/// is zero.
pub fn finfty_boundary_system(
    generator_budget: usize,
    mc_samples: usize,
    seed: u64,
) -> Result<FinftyBoundarySystem, MarkovError> {
    assert!(
        generator_budget >= 2 && generator_budget.is_multiple_of(2),
        "budget counts symbols and must be even"
    );
    assert!(mc_samples >= 1, "need at least one excursion per symbol");
    let chain = MarkovChain::finfty_chain();
    let mut pi = Vec::with_capacity(generator_budget);
    for i in 0..generator_budget {
        let stats = chain.expected_return_time(
            i as u32,
            DEFAULT_RETURN_HORIZON,
            mc_samples,
            subseed(seed, i as u64),
        )?;
        pi.push(1.0 / stats.mean_return);
    }
    Ok(FinftyBoundarySystem {
        chain,
        budget: generator_budget,
        pi,
        mc_samples,
    })
}

impl FinftyBoundarySystem {
    /// The driving chain.
    #[must_use]
    pub fn chain(&self) -> &MarkovChain {
        &self.chain
    }

    /// Number of usable symbols.
    #[must_use]
    pub fn budget(&self) -> usize {
        self.budget
    }

    /// Estimated stationary mass of symbol `i` (`1/mean return time`).
    #[must_use]
    pub fn stationary_estimate(&self, i: u32) -> Option<f64> {
        self.pi.get(i as usize).copied()
    }

    /// Initial-distribution mass of the rejected symbols (`≥ budget`):
    /// `Σ_{j ≥ budget} 2^{−(j+1)} = 2^{−budget}`.
    #[must_use]
    pub fn excluded_initial_mass(&self) -> f64 {
        0.5f64.powi(self.budget as i32)
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

impl System for FinftyBoundarySystem {
    fn id(&self) -> String {
        format!("boundary:finfty:G={}:mc={}", self.budget, self.mc_samples)
    }

    fn alphabet(&self) -> Alphabet {
        Alphabet::free_group(self.budget / 2)
    }

    fn apply_t(&self, x: &Point) -> Result<Point, SystemError> {
        let prefix = self.prefix_of(x)?;
        let shifted = prefix.parent().ok_or(SystemError::InsufficientDepth {
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
        let pi_x0 = self
            .stationary_estimate(x0)
            .ok_or(SystemError::DomainError(format!(
                "first coordinate {x0} is outside the generator budget"
            )))?;
        let mut branches = Vec::with_capacity(self.budget);
        for i in 0..self.budget as u32 {
            let p = self.chain.transition(i, x0);
            if p > 0.0 {
                branches.push(PreimageBranch {
                    symbol: i,
                    point: Point::symbolic(prefix.prepend(i)),
                    weight: self.pi[i as usize] * p / pi_x0,
                });
            }
        }
        // In exact arithmetic the enumerated weights together with the
        // out-of-budget branches sum to one; the tail reports whatever the
        // estimates leave over.
        let enumerated: f64 = branches.iter().map(|b| b.weight).sum();
        Ok(PreimageSet {
            branches,
            tail: (1.0 - enumerated).max(0.0),
        })
    }

    fn sample_point(&self, rng: &mut dyn RngCore, depth: usize) -> Point {
        // Redraw paths that leave the generator budget; at sensible
        // budgets the per-path rejection probability is below
        // depth·2^{1−budget}.
        loop {
            let w = self.chain.sample_path_with(depth.max(1), rng);
            if w.symbols().iter().all(|&s| (s as usize) < self.budget) {
                return Point::symbolic(w);
            }
        }
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

    fn invariant_target(&self, f: &Observable, _x: &Point) -> Option<f64> {
        match f {
            Observable::Cylinder { depth: 0, values, .. } => Some(values[0]),
            // The one analytically known stationary mass: symbol 0 returns
            // in expected time 5/2, so its mass is 2/5.
            Observable::Cylinder {
                depth: 1, values, ..
            } if values[0] == 1.0 && values[1..].iter().all(|&v| v == 0.0) => Some(0.4),
            _ => None,
        }
    }
}
