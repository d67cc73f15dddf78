//! The continued-fraction (Gauss) map `x ↦ 1/x mod 1` on `(0,1]`.
//!
//! The map is countably branching: the inverse branches are
//! `x ↦ 1/(n + x)` for `n ≥ 1`. Under the invariant density
//! `1/((ln 2)(1 + x))`, branch `n` at `x` carries the weight
//!
//! ```text
//! ρ(1/(n+x), x) = (1 + x) / ((n + x)(n + x + 1)),
//! ```
//!
//! and the weights telescope: the first `M` of them sum to
//! `1 − (1+x)/(M+1+x)` *exactly*. The system therefore enumerates branches
//! up to a declared cap `M` and reports the analytic remainder as the tail,
//! so downstream averages can track truncation honestly instead of
//! pretending the tree is finite.

use rand::RngCore;

use crate::words::{Alphabet, Symbol};

use super::{ContinuousKind, Observable, Point, PreimageBranch, PreimageSet, System, SystemError};

/// The Gauss map with inverse branches enumerated up to a cap.
#[derive(Debug, Clone)]
pub struct GaussSystem {
    cap: usize,
}

/// The Gauss map with `branch_cap` enumerated inverse branches per point.
///
/// # Panics
/// Panics if `branch_cap < 2`.
#[must_use]
pub fn gauss_system(branch_cap: usize) -> GaussSystem {
    assert!(branch_cap >= 2, "need at least two branches");
    GaussSystem { cap: branch_cap }
}

impl GaussSystem {
    /// The branch cap `M`.
    #[must_use]
    pub fn cap(&self) -> usize {
        self.cap
    }

    /// The analytic tail weight `(1+x)/(M+1+x)` not covered by the
    /// enumerated branches at `x`.
    #[must_use]
    pub fn tail_weight(&self, x: f64) -> f64 {
        (1.0 + x) / (self.cap as f64 + 1.0 + x)
    }

    fn value_of(&self, x: &Point) -> Result<f64, SystemError> {
        match x {
            Point::Real { value } => {
                if *value > 0.0 && *value <= 1.0 {
                    Ok(*value)
                } else {
                    Err(SystemError::DomainError(format!(
                        "{value} is outside (0, 1]"
                    )))
                }
            }
            _ => Err(SystemError::WrongPointKind { expected: "real" }),
        }
    }
}

impl System for GaussSystem {
    fn id(&self) -> String {
        format!("gauss:M={}", self.cap)
    }

    fn alphabet(&self) -> Alphabet {
        // Symbol i stands for the continued-fraction digit i + 1.
        Alphabet::plain(self.cap)
    }

    fn apply_t(&self, x: &Point) -> Result<Point, SystemError> {
        let v = self.value_of(x)?;
        let inv = 1.0 / v;
        Ok(Point::Real {
            value: inv - inv.floor(),
        })
    }

    fn preimages(&self, x: &Point) -> Result<PreimageSet, SystemError> {
        let v = self.value_of(x)?;
        let mut branches = Vec::with_capacity(self.cap);
        for i in 0..self.cap {
            let n = (i + 1) as f64;
            branches.push(PreimageBranch {
                symbol: i as Symbol,
                point: Point::Real {
                    value: 1.0 / (n + v),
                },
                weight: (1.0 + v) / ((n + v) * (n + v + 1.0)),
            });
        }
        Ok(PreimageSet {
            branches,
            tail: self.tail_weight(v),
        })
    }

    fn sample_point(&self, rng: &mut dyn RngCore, _depth: usize) -> Point {
        // 2^U − 1 with U uniform has exactly the invariant distribution:
        // ℙ[X ≤ t] = log₂(1 + t). Rejection only retries the rare draws
        // that land on a float with a terminating continued fraction.
        loop {
            let u: f64 = rand::Rng::gen(rng);
            if let Ok(p) = Point::real_checked(2f64.powf(u) - 1.0) {
                return p;
            }
        }
    }

    fn evaluate(&self, f: &Observable, x: &Point) -> Result<f64, SystemError> {
        let v = self.value_of(x)?;
        match f {
            Observable::Continuous {
                kind: ContinuousKind::Identity,
            } => Ok(v),
            Observable::Cylinder { depth: 0, values, .. } => Ok(values[0]),
            _ => Err(SystemError::UnsupportedObservable {
                system: self.id(),
                observable: f.name(),
            }),
        }
    }

    fn invariant_target(&self, f: &Observable, _x: &Point) -> Option<f64> {
        match f {
            // ∫ x dμ with dμ = dx/((ln 2)(1+x)) over (0,1).
            Observable::Continuous {
                kind: ContinuousKind::Identity,
            } => Some(1.0 / std::f64::consts::LN_2 - 1.0),
            Observable::Cylinder { depth: 0, values, .. } => Some(values[0]),
            _ => None,
        }
    }
}
