//! Best-first branch and bound over the LP relaxation.
//!
//! Nodes carry a set of fixed flip indicators; the LP relaxation of the rest
//! prices the node. Because `eps` is ten orders of magnitude below the data
//! scale, the relaxation's value is almost zero everywhere (free indicators
//! can absorb any violation at `1/M` cost), so its real power is
//! *infeasibility*: once enough indicators are pinned to zero, the pinned
//! margin rows either admit a classifier or cut the subtree. The node bound
//! is therefore the LP value rounded up or the number of indicators already
//! fixed to one, whichever is larger.
//!
//! The frontier is ordered by that bound (ties by insertion order, so the
//! search is deterministic). Branching splits the most fractional indicator
//! when one exists; when the relaxation is integral but its rounded flip set
//! fails the strict margin re-check (the usual case, because the LP cannot
//! resolve `eps` against its own feasibility tolerance), the lowest unfixed
//! indicator is split instead, which keeps the enumeration exhaustive.
//! Certified candidates come only from the strict margin LP, never from raw
//! relaxation output.
//!
//! The search starts from a guaranteed incumbent: flipping every point whose
//! label differs from the target's desired side is always realizable by a
//! constant-sign classifier. Exhausting the node budget therefore still
//! returns a certified upper bound with witness, never nothing.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashSet};

use crate::error::{Error, Result};
use crate::exact::{ExactResult, MilpInstance, SolveStatus};
use crate::linsep::simplex::{solve_lp, LpProblem, LpStatus, LpTolerances};
use crate::linsep::{self, LinearClassifier};

/// Indicators within this of 0 or 1 count as integral.
const INT_TOL: f64 = 1e-6;
/// Slack when rounding an LP value up to an integer bound.
const OBJ_TOL: f64 = 1e-6;

struct Node {
    bound: usize,
    seq: u64,
    fixed: Vec<(usize, f64)>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        (self.bound, self.seq) == (other.bound, other.seq)
    }
}

impl Eq for Node {}

impl Ord for Node {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.bound, self.seq).cmp(&(other.bound, other.seq))
    }
}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

fn fixed_problem(inst: &MilpInstance, fixed: &[(usize, f64)]) -> LpProblem {
    let mut lp = inst.base.clone();
    for &(j, v) in fixed {
        lp.bounds[j] = (v, v);
    }
    lp
}

struct Incumbent {
    cost: usize,
    flip_set: Vec<usize>,
    witness: LinearClassifier,
}

/// Certify a flip set through the strict margin LP. `Ok(None)` means the
/// rounded candidate does not actually realize the labeling (an
/// eps-boundary artifact of the LP tolerance) and must be discarded.
fn certify(inst: &MilpInstance, flip_set: Vec<usize>) -> Result<Option<Incumbent>> {
    let points = inst.flipped_points(&flip_set);
    let w = linsep::feasible_labeling(&points, Some(inst.target()), inst.eps, inst.big_m)?;
    Ok(w.classifier.map(|witness| Incumbent { cost: flip_set.len(), flip_set, witness }))
}

/// Minimize the number of flips by branch and bound.
///
/// `incumbent_hint`, when given, must be a true upper bound on the optimum
/// (for example a certified augmentation bound); nodes whose LP bound
/// strictly exceeds it are pruned without ever being expanded. The search
/// never expands more than `node_budget` nodes; if the budget runs out while
/// open nodes remain, the result is the best incumbent so far, marked
/// [`SolveStatus::BudgetExhausted`], and its `robustness` is a certified
/// upper bound rather than the optimum.
pub fn solve_bnb(
    inst: &MilpInstance,
    node_budget: u64,
    incumbent_hint: Option<usize>,
) -> Result<ExactResult> {
    if node_budget == 0 {
        return Err(Error::invalid("node budget must be at least 1"));
    }
    let tol = LpTolerances::default();
    let hint = incumbent_hint.unwrap_or(usize::MAX);

    let unflipped = inst.flipped_points(&[]);
    let all_disagreeing: Vec<usize> =
        (0..inst.m()).filter(|&i| unflipped[i].1 != inst.target().y).collect();
    let mut incumbent = certify(inst, all_disagreeing)?.ok_or_else(|| {
        Error::Numerical("the always-realizable constant labeling was rejected".into())
    })?;

    let mut heap: BinaryHeap<Reverse<Node>> = BinaryHeap::new();
    heap.push(Reverse(Node { bound: 0, seq: 0, fixed: Vec::new() }));
    let mut seq: u64 = 1;
    let mut node_count: u64 = 0;
    let mut exhausted = false;
    // Rounded candidates that already failed the strict re-check. A node and
    // its zero-branch descendants round to the same set, so memoizing saves
    // one margin LP per spine node.
    let mut rejected: HashSet<Vec<usize>> = HashSet::new();

    while let Some(Reverse(node)) = heap.pop() {
        if node.bound >= incumbent.cost || node.bound > hint {
            continue;
        }
        if node_count >= node_budget {
            exhausted = true;
            break;
        }
        node_count += 1;

        let sol = solve_lp(&fixed_problem(inst, &node.fixed), &tol)?;
        match sol.status {
            LpStatus::Infeasible => continue,
            LpStatus::Unbounded => {
                return Err(Error::Numerical("box-bounded relaxation reported unbounded".into()))
            }
            LpStatus::Optimal => {}
        }
        let ones_fixed = node.fixed.iter().filter(|&&(_, v)| v == 1.0).count();
        let lp_bound = (sol.objective_value - OBJ_TOL).ceil().max(0.0) as usize;
        let bound = lp_bound.max(ones_fixed);
        if bound >= incumbent.cost || bound > hint {
            continue;
        }

        // Most fractional indicator, ties to the lowest index.
        let mut branch: Option<(usize, f64)> = None;
        let mut integral = true;
        for &j in &inst.binary_indices {
            let v = sol.assignment[j];
            if (v - v.round()).abs() > INT_TOL {
                integral = false;
                let score = (v - 0.5).abs();
                if branch.map_or(true, |(_, s)| score < s) {
                    branch = Some((j, score));
                }
            }
        }

        if integral {
            let flip_set: Vec<usize> = inst
                .binary_indices
                .iter()
                .enumerate()
                .filter(|&(_, &j)| sol.assignment[j] > 0.5)
                .map(|(i, _)| i)
                .collect();
            if flip_set.len() < incumbent.cost && !rejected.contains(&flip_set) {
                match certify(inst, flip_set.clone())? {
                    Some(better) => {
                        incumbent = better;
                        continue;
                    }
                    None => {
                        rejected.insert(flip_set);
                    }
                }
            }
            // The rounded set is no improvement or fails the strict
            // re-check: split the lowest unfixed indicator so enumeration
            // stays exhaustive. A fully fixed leaf is done either way.
            branch = inst
                .binary_indices
                .iter()
                .find(|&&j| node.fixed.iter().all(|&(f, _)| f != j))
                .map(|&j| (j, 0.0));
            if branch.is_none() {
                continue;
            }
        }

        let (j, _) = branch.expect("checked above");
        for v in [0.0, 1.0] {
            let mut fixed = node.fixed.clone();
            fixed.push((j, v));
            let child_bound = bound.max(ones_fixed + usize::from(v == 1.0));
            heap.push(Reverse(Node { bound: child_bound, seq, fixed }));
            seq += 1;
        }
    }

    let mut flip_set = incumbent.flip_set;
    flip_set.sort_unstable();
    Ok(ExactResult {
        robustness: incumbent.cost,
        flip_set,
        witness: incumbent.witness,
        node_count,
        status: if exhausted { SolveStatus::BudgetExhausted } else { SolveStatus::Proven },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{Dataset, TestTarget};
    use crate::exact::{brute::brute_force, encode, verify_certificate};

    const EPS: f64 = 1e-10;
    const BIG_M: f64 = 1000.0;

    fn grid_instance() -> (Dataset, TestTarget) {
        // Two spread-out clusters plus one inlier of each class.
        let data = Dataset::new(
            vec![
                0.0, 0.0, 0.5, 0.2, 0.1, 0.8, 3.0, 3.0, 3.5, 2.8, 2.9, 3.6, 1.4, 1.6, 1.7, 1.5,
            ],
            vec![1.0, 1.0, 1.0, -1.0, -1.0, -1.0, 1.0, -1.0],
            2,
            None,
        )
        .unwrap();
        let target = TestTarget::new(vec![0.2, 0.3], -1.0).unwrap();
        (data, target)
    }

    #[test]
    fn agrees_with_brute_force() {
        let (data, target) = grid_instance();
        let inst = encode(&data, &target, BIG_M, EPS).unwrap();
        let exact = solve_bnb(&inst, 1_000_000, None).unwrap();
        let oracle = brute_force(&data, &target, EPS, BIG_M).unwrap();
        assert_eq!(exact.status, SolveStatus::Proven);
        assert_eq!(exact.robustness, oracle.robustness);
        assert!(verify_certificate(&data, &target, &exact, EPS, BIG_M).unwrap());
    }

    #[test]
    fn zero_flip_instances_prove_immediately() {
        let data = Dataset::new(vec![0.0, 2.0], vec![-1.0, 1.0], 1, None).unwrap();
        let target = TestTarget::new(vec![-1.0], -1.0).unwrap();
        let inst = encode(&data, &target, BIG_M, EPS).unwrap();
        let r = solve_bnb(&inst, 1000, None).unwrap();
        assert_eq!(r.robustness, 0);
        assert_eq!(r.flip_set, Vec::<usize>::new());
        assert_eq!(r.status, SolveStatus::Proven);
    }

    #[test]
    fn budget_exhaustion_degrades_to_certified_upper_bound() {
        let (data, target) = grid_instance();
        let inst = encode(&data, &target, BIG_M, EPS).unwrap();
        let truth = brute_force(&data, &target, EPS, BIG_M).unwrap();
        let r = solve_bnb(&inst, 1, None).unwrap();
        assert_eq!(r.status, SolveStatus::BudgetExhausted);
        assert!(r.node_count <= 1);
        assert!(r.robustness >= truth.robustness);
        assert!(verify_certificate(&data, &target, &r, EPS, BIG_M).unwrap());
    }

    #[test]
    fn tight_hint_is_safe() {
        let (data, target) = grid_instance();
        let inst = encode(&data, &target, BIG_M, EPS).unwrap();
        let truth = brute_force(&data, &target, EPS, BIG_M).unwrap();
        let hinted = solve_bnb(&inst, 1_000_000, Some(truth.robustness)).unwrap();
        assert_eq!(hinted.status, SolveStatus::Proven);
        assert_eq!(hinted.robustness, truth.robustness);
        let unhinted = solve_bnb(&inst, 1_000_000, None).unwrap();
        assert!(hinted.node_count <= unhinted.node_count);
    }

    #[test]
    fn rejects_zero_budget() {
        let (data, target) = grid_instance();
        let inst = encode(&data, &target, BIG_M, EPS).unwrap();
        assert!(solve_bnb(&inst, 0, None).is_err());
    }
}
