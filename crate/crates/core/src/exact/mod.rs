//! Exact label-flip robustness.
//!
//! The minimum number of label flips that lets some bounded linear
//! classifier match the flipped labels and put the target on its desired
//! side is the optimum of a small mixed-integer program: one flip indicator
//! per training point, big-M constraints tying each indicator to the two
//! possible margins of its point, and the target margin required outright.
//! [`encode`] builds that program, [`bnb::solve_bnb`] optimizes it by branch
//! and bound over the LP relaxation, and [`brute::brute_force`] recomputes
//! the same quantity by subset enumeration so the two can be checked against
//! each other.

pub mod bnb;
pub mod brute;

use std::fmt::Write as _;

use serde::Serialize;

use crate::dataset::{Dataset, TestTarget};
use crate::error::{Error, Result};
use crate::linsep::simplex::{Constraint, LpProblem, Relation};
use crate::linsep::{self, LinearClassifier};

/// Mixed-integer encoding of one robustness instance.
///
/// Variables are ordered `w_1 .. w_d, b, delta_1 .. delta_m`. The base LP
/// relaxes every `delta_i` to `[0, 1]`; the rows are, in order:
///
/// 1. `y_t (w . x_t + b) >= eps` (target side, unconditional),
/// 2. `y_i (w . x_i + b) + M delta_i >= eps` for each point,
/// 3. `y_i (w . x_i + b) - M (1 - delta_i) <= -eps` for each point.
///
/// With `delta_i = 0` row 2 forces the original label and row 3 is slack;
/// with `delta_i = 1` the roles swap. That only works while every decision
/// value stays inside `(-M, M)`, which the `[-M, M]` boxes on `w` and `b`
/// do not guarantee by themselves for far-out points; `M` must dominate the
/// data scale.
#[derive(Debug, Clone)]
pub struct MilpInstance {
    pub base: LpProblem,
    pub binary_indices: Vec<usize>,
    pub big_m: f64,
    pub eps: f64,
    m: usize,
    d: usize,
    points: Vec<(Vec<f64>, f64)>,
    target: TestTarget,
}

impl MilpInstance {
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn target(&self) -> &TestTarget {
        &self.target
    }

    /// Training labels with the given flip set applied.
    pub fn flipped_points(&self, flip_set: &[usize]) -> Vec<(&[f64], f64)> {
        let mut points: Vec<(&[f64], f64)> =
            self.points.iter().map(|(x, y)| (x.as_slice(), *y)).collect();
        for &i in flip_set {
            points[i].1 = -points[i].1;
        }
        points
    }

    /// Plain-text rendering of the program for debugging.
    pub fn to_lp_text(&self) -> String {
        let var = |j: usize| {
            if j < self.d {
                format!("w{}", j + 1)
            } else if j == self.d {
                "b".to_string()
            } else {
                format!("d{}", j - self.d)
            }
        };
        let mut out = String::new();
        out.push_str("Minimize\n  ");
        let mut first = true;
        for (j, c) in self.base.objective.iter().enumerate() {
            if *c != 0.0 {
                if !first {
                    out.push_str(" + ");
                }
                let _ = write!(out, "{} {}", c, var(j));
                first = false;
            }
        }
        out.push_str("\nSubject To\n");
        for (r, row) in self.base.constraints.iter().enumerate() {
            let _ = write!(out, "  c{}:", r + 1);
            for (j, a) in row.coeffs.iter().enumerate() {
                if *a != 0.0 {
                    let _ = write!(out, " {:+} {}", a, var(j));
                }
            }
            let rel = match row.relation {
                Relation::Le => "<=",
                Relation::Ge => ">=",
                Relation::Eq => "=",
            };
            let _ = writeln!(out, " {rel} {}", row.rhs);
        }
        out.push_str("Bounds\n");
        for (j, (lo, hi)) in self.base.bounds.iter().enumerate() {
            let _ = writeln!(out, "  {lo} <= {} <= {hi}", var(j));
        }
        out.push_str("Binary\n ");
        for &j in &self.binary_indices {
            let _ = write!(out, " {}", var(j));
        }
        out.push_str("\nEnd\n");
        out
    }
}

/// Build the mixed-integer program for one `(dataset, target)` pair.
pub fn encode(data: &Dataset, target: &TestTarget, big_m: f64, eps: f64) -> Result<MilpInstance> {
    target.check_dim(data.d())?;
    if !(big_m > 0.0) || !big_m.is_finite() {
        return Err(Error::invalid("big-M must be positive and finite"));
    }
    if !(eps > 0.0) || eps >= big_m {
        return Err(Error::invalid("eps must satisfy 0 < eps < big-M"));
    }
    let (m, d) = (data.m(), data.d());
    let n = d + 1 + m;
    let delta = |i: usize| d + 1 + i;

    let mut objective = vec![0.0; n];
    for i in 0..m {
        objective[delta(i)] = 1.0;
    }

    let margin_coeffs = |x: &[f64], y: f64| {
        let mut coeffs = vec![0.0; n];
        for (c, v) in coeffs.iter_mut().zip(x) {
            *c = y * v;
        }
        coeffs[d] = y;
        coeffs
    };

    let mut constraints = Vec::with_capacity(1 + 2 * m);
    constraints.push(Constraint {
        coeffs: margin_coeffs(&target.x, target.y),
        relation: Relation::Ge,
        rhs: eps,
    });
    for i in 0..m {
        let mut coeffs = margin_coeffs(data.row(i), data.label(i));
        coeffs[delta(i)] = big_m;
        constraints.push(Constraint { coeffs, relation: Relation::Ge, rhs: eps });
    }
    for i in 0..m {
        let mut coeffs = margin_coeffs(data.row(i), data.label(i));
        coeffs[delta(i)] = big_m;
        // y_i (w . x_i + b) - M (1 - delta_i) <= -eps with the constant
        // moved to the right-hand side.
        constraints.push(Constraint { coeffs, relation: Relation::Le, rhs: big_m - eps });
    }

    let mut bounds = vec![(-big_m, big_m); n];
    for i in 0..m {
        bounds[delta(i)] = (0.0, 1.0);
    }

    Ok(MilpInstance {
        base: LpProblem { objective, constraints, bounds },
        binary_indices: (d + 1..n).collect(),
        big_m,
        eps,
        m,
        d,
        points: data.rows().zip(data.labels()).map(|(x, &y)| (x.to_vec(), y)).collect(),
        target: target.clone(),
    })
}

/// How a solve ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    /// `robustness` is the exact optimum.
    Proven,
    /// The node budget ran out; `robustness` is a certified upper bound.
    BudgetExhausted,
}

/// A robustness value with its certificate.
#[derive(Debug, Clone, Serialize)]
pub struct ExactResult {
    pub robustness: usize,
    /// Sorted training-row indices whose labels the witness flips.
    pub flip_set: Vec<usize>,
    /// Classifier consistent with the flipped labels that puts the target
    /// on its desired side.
    pub witness: LinearClassifier,
    /// Nodes expanded (LP solves for branch and bound, labelings tried for
    /// brute force).
    pub node_count: u64,
    pub status: SolveStatus,
}

/// Re-check a result from scratch: the flip set must be valid, the flipped
/// labeling must be realizable, its size must equal the claimed robustness,
/// and the stored witness must be strictly consistent.
pub fn verify_certificate(
    data: &Dataset,
    target: &TestTarget,
    result: &ExactResult,
    eps: f64,
    cap: f64,
) -> Result<bool> {
    if result.flip_set.len() != result.robustness {
        return Ok(false);
    }
    let flipped = data.with_flipped(&result.flip_set)?;
    let points = linsep::dataset_points(&flipped);
    if !linsep::check_consistency(&result.witness, &points, Some(target)).clean() {
        return Ok(false);
    }
    Ok(linsep::feasible_labeling(&points, Some(target), eps, cap)?.feasible)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> (Dataset, TestTarget) {
        let data = Dataset::new(
            vec![0.0, 0.0, 1.0, 0.0, 0.0, 1.0],
            vec![1.0, -1.0, 1.0],
            2,
            None,
        )
        .unwrap();
        let target = TestTarget::new(vec![2.0, 2.0], -1.0).unwrap();
        (data, target)
    }

    #[test]
    fn encode_shapes_match_the_contract() {
        let (data, target) = toy();
        let inst = encode(&data, &target, 1000.0, 1e-10).unwrap();
        // m = 3, d = 2: 2 + 1 + 3 variables, 1 + 2 * 3 rows.
        assert_eq!(inst.base.n(), 6);
        assert_eq!(inst.base.constraints.len(), 7);
        assert_eq!(inst.binary_indices, vec![3, 4, 5]);
        assert_eq!(inst.base.objective, vec![0.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        assert_eq!(inst.base.bounds[0], (-1000.0, 1000.0));
        assert_eq!(inst.base.bounds[3], (0.0, 1.0));
        // Target row: y_t = -1.
        let t = &inst.base.constraints[0];
        assert_eq!(t.coeffs, vec![-2.0, -2.0, -1.0, 0.0, 0.0, 0.0]);
        assert_eq!(t.relation, Relation::Ge);
        assert_eq!(t.rhs, 1e-10);
        // Second family for point 1 (x = (1, 0), y = -1).
        let r = &inst.base.constraints[2];
        assert_eq!(r.coeffs, vec![-1.0, -0.0, -1.0, 0.0, 1000.0, 0.0]);
        assert_eq!(r.relation, Relation::Ge);
        // Third family for the same point.
        let r = &inst.base.constraints[5];
        assert_eq!(r.coeffs, vec![-1.0, -0.0, -1.0, 0.0, 1000.0, 0.0]);
        assert_eq!(r.relation, Relation::Le);
        assert_eq!(r.rhs, 1000.0 - 1e-10);
    }

    #[test]
    fn encode_validates_parameters() {
        let (data, target) = toy();
        assert!(encode(&data, &target, 0.0, 1e-10).is_err());
        assert!(encode(&data, &target, 1000.0, 0.0).is_err());
        assert!(encode(&data, &target, 1.0, 2.0).is_err());
        let skinny = TestTarget::new(vec![1.0], -1.0).unwrap();
        assert!(encode(&data, &skinny, 1000.0, 1e-10).is_err());
    }

    #[test]
    fn lp_text_lists_all_sections() {
        let (data, target) = toy();
        let text = encode(&data, &target, 1000.0, 1e-10).unwrap().to_lp_text();
        for section in ["Minimize", "Subject To", "Bounds", "Binary", "End"] {
            assert!(text.contains(section), "missing {section} in:\n{text}");
        }
        assert!(text.contains("d1"));
        assert!(text.contains("w2"));
    }
}
