//! String-addressable registry of the built-in systems.
//!
//! Every system that configs and the command line can name lives here.
//! The ids follow `family:parameters`:
//!
//! * `bernoulli:<k>` — uniform shift on `k` symbols;
//! * `markov:two_state` — the asymmetric two-state chain shift;
//! * `blocks` — the reducible two-block shift with per-block targets;
//! * `boundary:r=<r>:uniform` — rank-`r` free-group boundary under the
//!   uniform non-cancelling chain;
//! * `gauss:M=<cap>` — the continued-fraction map with `cap` enumerated
//!   branches;
//! * `skew:rotation:r=<r>` — the skew product of circle rotations of the
//!   rank-`r` free group with its boundary shift.
//!
//! The infinite-rank boundary is deliberately *not* registered: its
//! preimage weights are Monte Carlo estimates, so it would fail the exact
//! weight identities that every cataloged system is expected to satisfy.
//! Build it directly with [`super::finfty_boundary_system`].

use crate::markov::MarkovChain;

use super::{
    bernoulli_system, block_chain_system, boundary_system, gauss_system, markov_shift_system,
    skew::CircleRotationAction, skew_product_system, System, SystemError,
};

/// Ids of the systems every installation ships with.
#[must_use]
pub fn catalog_ids() -> Vec<&'static str> {
    vec![
        "bernoulli:2",
        "bernoulli:3",
        "markov:two_state",
        "blocks",
        "boundary:r=2:uniform",
        "boundary:r=3:uniform",
        "gauss:M=50",
        "skew:rotation:r=2",
    ]
}

fn parse_param<T: std::str::FromStr>(part: &str, key: &str) -> Option<T> {
    part.strip_prefix(key)
        .and_then(|v| v.parse().ok())
}

/// Instantiates a system from its id. Parameterized families accept any
/// sensible parameter, not only the values in [`catalog_ids`]: for example
/// `bernoulli:5` or `gauss:M=200`.
///
/// # Errors
/// [`SystemError::UnknownSystem`] for unparseable ids; construction errors
/// pass through for ids naming invalid combinations.
pub fn system_by_id(id: &str) -> Result<Box<dyn System>, SystemError> {
    let unknown = || SystemError::UnknownSystem(id.to_string());
    let parts: Vec<&str> = id.split(':').collect();
    match parts.as_slice() {
        ["bernoulli", k] => {
            let k: usize = k.parse().map_err(|_| unknown())?;
            if k < 2 {
                return Err(unknown());
            }
            Ok(Box::new(bernoulli_system(k)))
        }
        ["markov", "two_state"] => Ok(Box::new(markov_shift_system(
            MarkovChain::two_state(),
            "two_state",
        )?)),
        ["blocks"] => Ok(Box::new(block_chain_system())),
        ["boundary", r_part, "uniform"] => {
            let r: usize = parse_param(r_part, "r=").ok_or_else(unknown)?;
            if r < 2 {
                return Err(unknown());
            }
            Ok(Box::new(boundary_system(
                r,
                MarkovChain::uniform_free_group(r),
                "uniform",
            )?))
        }
        ["gauss", m_part] => {
            let cap: usize = parse_param(m_part, "M=").ok_or_else(unknown)?;
            if cap < 2 {
                return Err(unknown());
            }
            Ok(Box::new(gauss_system(cap)))
        }
        ["skew", "rotation", r_part] => {
            let r: usize = parse_param(r_part, "r=").ok_or_else(unknown)?;
            if !(1..=16).contains(&r) {
                return Err(unknown());
            }
            Ok(Box::new(skew_product_system(
                Box::new(CircleRotationAction::standard(r)),
                MarkovChain::uniform_free_group(r),
                "rotation",
            )?))
        }
        _ => Err(unknown()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_catalog_id_instantiates_with_its_own_id() {
        let ids = catalog_ids();
        assert!(ids.len() >= 7);
        assert!(ids.contains(&"gauss:M=50"));
        assert!(ids.contains(&"skew:rotation:r=2"));
        for id in ids {
            let sys = system_by_id(id).unwrap();
            assert_eq!(sys.id(), id, "id round trip failed for {id}");
        }
    }

    #[test]
    fn parameter_families_accept_other_values() {
        assert_eq!(system_by_id("bernoulli:5").unwrap().id(), "bernoulli:5");
        assert_eq!(system_by_id("gauss:M=200").unwrap().id(), "gauss:M=200");
        assert_eq!(
            system_by_id("boundary:r=4:uniform").unwrap().id(),
            "boundary:r=4:uniform"
        );
    }

    #[test]
    fn unknown_ids_are_rejected() {
        for bad in [
            "bernoulli:1",
            "bernoulli:x",
            "gauss:M=1",
            "gauss:50",
            "boundary:r=2:weird",
            "nonsense",
            "",
            "skew:rotation:r=0",
        ] {
            assert!(
                matches!(system_by_id(bad), Err(SystemError::UnknownSystem(_))),
                "id {bad:?} should be unknown"
            );
        }
    }
}
