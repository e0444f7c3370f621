//! Linear separability: can some hyperplane realize a given labeling?
//!
//! [`feasible_labeling`] answers by solving a margin-maximization LP over
//! `(w, b, t)`: maximize the worst margin `t` subject to
//! `y_i (w . x_i + b) >= t` for every point (and the target, when one is
//! given), with all of `w`, `b` capped in `[-cap, cap]`. The labeling is
//! realizable with margin `eps` exactly when the optimal `t` reaches `eps`.
//! Maximizing the margin instead of asking for `eps` directly returns a
//! witness whose margins sit far from zero, so the consistency re-check
//! below is numerically safe even though `eps` itself is tiny.

pub mod simplex;

use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, TestTarget};
use crate::error::{Error, Result};
use simplex::{Constraint, LpProblem, LpStatus, LpTolerances, Relation};

/// Hyperplane classifier `x -> sign(w . x + b)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearClassifier {
    pub w: Vec<f64>,
    pub b: f64,
}

impl LinearClassifier {
    pub fn zero(d: usize) -> Self {
        LinearClassifier { w: vec![0.0; d], b: 0.0 }
    }

    pub fn decision(&self, x: &[f64]) -> f64 {
        self.w.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.b
    }

    /// Signed margin of a labeled point; positive means strictly correct.
    pub fn margin(&self, x: &[f64], y: f64) -> f64 {
        y * self.decision(x)
    }
}

/// Outcome of a [`feasible_labeling`] query.
#[derive(Debug, Clone)]
pub struct FeasibilityWitness {
    pub feasible: bool,
    /// Present exactly when `feasible`; realizes every margin strictly.
    pub classifier: Option<LinearClassifier>,
}

/// Result of checking a classifier against labeled points.
#[derive(Debug, Clone)]
pub struct Consistency {
    /// Indices with `y_i (w . x_i + b) <= 0`; a decision value of exactly
    /// zero counts as wrong for either label.
    pub misclassified: Vec<usize>,
    /// Target classified strictly as desired (vacuously true without one).
    pub target_ok: bool,
}

impl Consistency {
    pub fn clean(&self) -> bool {
        self.misclassified.is_empty() && self.target_ok
    }
}

/// Borrow a dataset as `(features, label)` pairs for the functions below.
pub fn dataset_points(data: &Dataset) -> Vec<(&[f64], f64)> {
    data.rows().zip(data.labels().iter().copied()).collect()
}

fn check_points(points: &[(&[f64], f64)], target: Option<&TestTarget>) -> Result<usize> {
    let d = match (points.first(), target) {
        (Some((x, _)), _) => x.len(),
        (None, Some(t)) => t.x.len(),
        (None, None) => return Err(Error::invalid("no points and no target")),
    };
    if d == 0 {
        return Err(Error::invalid("points must have at least one feature"));
    }
    for (i, (x, y)) in points.iter().enumerate() {
        if x.len() != d {
            return Err(Error::invalid(format!("point {i} has {} features, expected {d}", x.len())));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("point {i} has a non-finite feature")));
        }
        if *y != 1.0 && *y != -1.0 {
            return Err(Error::invalid(format!("point {i} has label {y}, expected +1 or -1")));
        }
    }
    if let Some(t) = target {
        t.check_dim(d)?;
    }
    Ok(d)
}

/// Decide whether some classifier with `|w_j|, |b| <= cap` realizes every
/// label (and the target's desired label) with margin at least `eps`.
pub fn feasible_labeling(
    points: &[(&[f64], f64)],
    target: Option<&TestTarget>,
    eps: f64,
    cap: f64,
) -> Result<FeasibilityWitness> {
    let d = check_points(points, target)?;
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::invalid("eps must be positive and finite"));
    }
    if !(cap > eps) || !cap.is_finite() {
        return Err(Error::invalid("cap must be finite and exceed eps"));
    }

    // Variables: w_1..w_d, b, t. Maximize t.
    let n = d + 2;
    let t_var = d + 1;
    let mut objective = vec![0.0; n];
    objective[t_var] = -1.0;

    let margin_row = |x: &[f64], y: f64| {
        let mut coeffs = vec![0.0; n];
        for (c, v) in coeffs.iter_mut().zip(x) {
            *c = y * v;
        }
        coeffs[d] = y;
        coeffs[t_var] = -1.0;
        Constraint { coeffs, relation: Relation::Ge, rhs: 0.0 }
    };
    let mut constraints: Vec<Constraint> =
        points.iter().map(|(x, y)| margin_row(x, *y)).collect();
    if let Some(t) = target {
        constraints.push(margin_row(&t.x, t.y));
    }

    // |w . x + b| <= cap (|x|_1 + 1), so t can never exceed that.
    let reach = points
        .iter()
        .map(|(x, _)| x.iter().map(|v| v.abs()).sum::<f64>())
        .chain(target.iter().map(|t| t.x.iter().map(|v| v.abs()).sum::<f64>()))
        .fold(0.0, f64::max);
    let t_max = cap * (reach + 1.0) + 1.0;

    let mut bounds = vec![(-cap, cap); n];
    bounds[t_var] = (0.0, t_max);

    let solution = simplex::solve_lp(
        &LpProblem { objective, constraints, bounds },
        &LpTolerances::default(),
    )?;
    // (0, 0, 0) is always feasible, so the LP cannot be anything but optimal.
    if solution.status != LpStatus::Optimal {
        return Err(Error::Numerical(format!(
            "margin LP ended {:?} despite a trivial feasible point",
            solution.status
        )));
    }

    let classifier =
        LinearClassifier { w: solution.assignment[..d].to_vec(), b: solution.assignment[d] };
    let t_star = solution.assignment[t_var];
    if t_star < eps {
        return Ok(FeasibilityWitness { feasible: false, classifier: None });
    }
    let check = check_consistency(&classifier, points, target);
    if !check.clean() {
        return Err(Error::Numerical(
            "margin LP reported a separating witness that fails the strict re-check".into(),
        ));
    }
    Ok(FeasibilityWitness { feasible: true, classifier: Some(classifier) })
}

/// Evaluate a classifier on labeled points: which are wrong, and does the
/// target get its desired label strictly?
pub fn check_consistency(
    classifier: &LinearClassifier,
    points: &[(&[f64], f64)],
    target: Option<&TestTarget>,
) -> Consistency {
    let misclassified = points
        .iter()
        .enumerate()
        .filter(|(_, (x, y))| classifier.margin(x, *y) <= 0.0)
        .map(|(i, _)| i)
        .collect();
    let target_ok = target.map_or(true, |t| classifier.margin(&t.x, t.y) > 0.0);
    Consistency { misclassified, target_ok }
}

#[cfg(test)]
mod tests {
    use super::*;

    const EPS: f64 = 1e-10;
    const CAP: f64 = 1000.0;

    #[test]
    fn separable_line_is_feasible() {
        let points: Vec<(&[f64], f64)> = vec![(&[1.0][..], 1.0), (&[2.0][..], -1.0)];
        let w = feasible_labeling(&points, None, EPS, CAP).unwrap();
        assert!(w.feasible);
        let c = w.classifier.unwrap();
        assert!(c.margin(&[1.0], 1.0) >= EPS);
        assert!(c.margin(&[2.0], -1.0) >= EPS);
        assert!(c.w[0].abs() <= CAP && c.b.abs() <= CAP);
    }

    #[test]
    fn xor_is_infeasible() {
        let points: Vec<(&[f64], f64)> = vec![
            (&[0.0, 0.0][..], 1.0),
            (&[1.0, 1.0][..], 1.0),
            (&[0.0, 1.0][..], -1.0),
            (&[1.0, 0.0][..], -1.0),
        ];
        let w = feasible_labeling(&points, None, EPS, CAP).unwrap();
        assert!(!w.feasible);
        assert!(w.classifier.is_none());
    }

    #[test]
    fn target_constraint_can_break_feasibility() {
        let points: Vec<(&[f64], f64)> = vec![(&[1.0][..], 1.0), (&[2.0][..], -1.0)];
        let inside = TestTarget::new(vec![1.5], 1.0).unwrap();
        assert!(feasible_labeling(&points, Some(&inside), EPS, CAP).unwrap().feasible);
        // +,-,+ along a line is not linearly realizable.
        let outside = TestTarget::new(vec![3.0], 1.0).unwrap();
        assert!(!feasible_labeling(&points, Some(&outside), EPS, CAP).unwrap().feasible);
    }

    #[test]
    fn witness_satisfies_consistency() {
        let points: Vec<(&[f64], f64)> = vec![
            (&[0.0, 0.0][..], -1.0),
            (&[1.0, 0.0][..], -1.0),
            (&[0.0, 2.0][..], 1.0),
            (&[1.5, 2.5][..], 1.0),
        ];
        let target = TestTarget::new(vec![0.5, 1.8], 1.0).unwrap();
        let w = feasible_labeling(&points, Some(&target), EPS, CAP).unwrap();
        assert!(w.feasible);
        let check = check_consistency(&w.classifier.unwrap(), &points, Some(&target));
        assert!(check.misclassified.is_empty());
        assert!(check.target_ok);
    }

    #[test]
    fn zero_decision_is_wrong_for_both_labels() {
        let c = LinearClassifier { w: vec![1.0], b: 0.0 };
        for y in [1.0, -1.0] {
            let points: Vec<(&[f64], f64)> = vec![(&[0.0][..], y)];
            let check = check_consistency(&c, &points, None);
            assert_eq!(check.misclassified, vec![0]);
        }
        let target = TestTarget::new(vec![0.0], 1.0).unwrap();
        assert!(!check_consistency(&c, &[(&[1.0][..], 1.0)], Some(&target)).target_ok);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(feasible_labeling(&[], None, EPS, CAP).is_err());
        let points: Vec<(&[f64], f64)> = vec![(&[1.0][..], 1.0)];
        assert!(feasible_labeling(&points, None, -1.0, CAP).is_err());
        assert!(feasible_labeling(&points, None, EPS, 0.0).is_err());
        let ragged: Vec<(&[f64], f64)> = vec![(&[1.0][..], 1.0), (&[1.0, 2.0][..], -1.0)];
        assert!(feasible_labeling(&ragged, None, EPS, CAP).is_err());
    }
}
