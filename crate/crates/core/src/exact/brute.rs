//! Brute-force robustness oracle.
//!
//! Enumerates flip sets by increasing cardinality, lexicographically within
//! each cardinality, and returns the first realizable one. Deliberately
//! independent of the mixed-integer encoding so the two can cross-check
//! each other; the only shared machinery is the feasibility LP.

use itertools::Itertools;

use crate::dataset::{Dataset, TestTarget};
use crate::error::{Error, Result};
use crate::exact::{ExactResult, SolveStatus};
use crate::linsep;

/// Largest training set the enumeration will accept. Enumeration stops at
/// the first realizable set, so runtime is driven by the robustness value,
/// not by 2^m; the cap guards the genuinely hard cases.
pub const MAX_POINTS: usize = 40;

/// Exact robustness by subset enumeration. The returned flip set is the
/// lexicographically smallest among the smallest realizable ones.
pub fn brute_force(
    data: &Dataset,
    target: &TestTarget,
    eps: f64,
    cap: f64,
) -> Result<ExactResult> {
    let m = data.m();
    if m > MAX_POINTS {
        return Err(Error::TooLarge(format!(
            "brute force handles at most {MAX_POINTS} points, got {m}"
        )));
    }
    target.check_dim(data.d())?;

    let mut tried: u64 = 0;
    for size in 0..=m {
        for subset in (0..m).combinations(size) {
            tried += 1;
            let flipped = data.with_flipped(&subset)?;
            let points = linsep::dataset_points(&flipped);
            let witness = linsep::feasible_labeling(&points, Some(target), eps, cap)?;
            if witness.feasible {
                return Ok(ExactResult {
                    robustness: size,
                    flip_set: subset,
                    witness: witness.classifier.expect("feasible implies witness"),
                    node_count: tried,
                    status: SolveStatus::Proven,
                });
            }
        }
    }
    // Flipping every point whose label differs from the target's desired
    // side is always realizable by a constant classifier, so the loop can
    // only fall through on numerical failure.
    Err(Error::Numerical("no labeling accepted, including the all-target-side one".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    const EPS: f64 = 1e-10;
    const CAP: f64 = 1000.0;

    #[test]
    fn agreeing_singleton_needs_no_flip() {
        let data = Dataset::new(vec![1.0], vec![1.0], 1, None).unwrap();
        let target = TestTarget::new(vec![2.0], 1.0).unwrap();
        let r = brute_force(&data, &target, EPS, CAP).unwrap();
        assert_eq!(r.robustness, 0);
        assert!(r.flip_set.is_empty());
        assert_eq!(r.status, SolveStatus::Proven);
    }

    #[test]
    fn coincident_opposing_singleton_needs_one_flip() {
        let data = Dataset::new(vec![1.0], vec![1.0], 1, None).unwrap();
        let target = TestTarget::new(vec![1.0], -1.0).unwrap();
        let r = brute_force(&data, &target, EPS, CAP).unwrap();
        assert_eq!(r.robustness, 1);
        assert_eq!(r.flip_set, vec![0]);
    }

    #[test]
    fn tie_breaks_lexicographically() {
        // Either point alone can be flipped to admit the target; the oracle
        // must pick index 0.
        let data = Dataset::new(vec![1.0, 2.0], vec![1.0, 1.0], 1, None).unwrap();
        let target = TestTarget::new(vec![1.5], -1.0).unwrap();
        let r = brute_force(&data, &target, EPS, CAP).unwrap();
        assert_eq!(r.robustness, 1);
        assert_eq!(r.flip_set, vec![0]);
    }

    #[test]
    fn certificate_verifies() {
        let data = Dataset::new(
            vec![0.0, 0.0, 2.0, 0.0, 0.0, 2.0, 2.0, 2.0],
            vec![1.0, 1.0, -1.0, -1.0],
            2,
            None,
        )
        .unwrap();
        let target = TestTarget::new(vec![0.1, 0.1], -1.0).unwrap();
        let r = brute_force(&data, &target, EPS, CAP).unwrap();
        assert!(crate::exact::verify_certificate(&data, &target, &r, EPS, CAP).unwrap());
        assert!(r.node_count >= 1);
    }

    #[test]
    fn refuses_oversized_inputs() {
        let m = MAX_POINTS + 1;
        let data = Dataset::new((0..m).map(|i| i as f64).collect(), vec![1.0; m], 1, None).unwrap();
        let target = TestTarget::new(vec![0.5], -1.0).unwrap();
        assert!(matches!(brute_force(&data, &target, EPS, CAP), Err(Error::TooLarge(_))));
    }
}
