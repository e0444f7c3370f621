//! Certified lower bound from disjoint blocks.
//!
//! Split the training rows into k disjoint blocks and solve each block's
//! robustness exactly against the same target. Any global flip set, cut down
//! to one block, still realizes that block's labels together with the
//! target, so it must contain at least the block's own optimum; summing the
//! proven per-block values therefore bounds the global robustness from
//! below. Blocks whose solve exhausts its budget (or fails outright)
//! contribute zero, which only weakens the bound, never invalidates it.

use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::dataset::{Dataset, TestTarget};
use crate::error::{Error, Result};
use crate::exact::{bnb, encode, SolveStatus};
use crate::seeds;

/// Random disjoint blocks of row indices.
#[derive(Debug, Clone, Serialize)]
pub struct PartitionPlan {
    pub k: usize,
    pub seed: u64,
    /// Sorted row indices per block; the first k-1 blocks hold
    /// `floor(m / k)` rows each and the last takes the remainder.
    pub blocks: Vec<Vec<usize>>,
}

/// Stock block count: enough blocks that each holds about `2 (d + 1)` rows,
/// never fewer than one block.
pub fn default_block_count(m: usize, d: usize) -> usize {
    (m / (2 * (d + 1))).max(1)
}

/// Shuffle rows with the given seed and chop the permutation into k blocks.
pub fn partition(data: &Dataset, k: usize, seed: u64) -> Result<PartitionPlan> {
    let m = data.m();
    if k == 0 || k > m {
        return Err(Error::invalid(format!("block count {k} out of range for m = {m}")));
    }
    let mut order: Vec<usize> = (0..m).collect();
    use rand::seq::SliceRandom;
    order.shuffle(&mut seeds::rng(seed));
    let base = m / k;
    let mut blocks = Vec::with_capacity(k);
    for j in 0..k {
        let start = j * base;
        let end = if j + 1 == k { m } else { start + base };
        let mut block = order[start..end].to_vec();
        block.sort_unstable();
        blocks.push(block);
    }
    Ok(PartitionPlan { k, seed, blocks })
}

/// Parameters for the per-block exact solves.
#[derive(Debug, Clone, Serialize)]
pub struct MilpParams {
    pub big_m: f64,
    pub eps: f64,
    pub node_budget: u64,
    /// Optional certified upper bound on the whole-dataset robustness; it
    /// bounds every block optimum too, so block searches may prune with it.
    pub incumbent_hint: Option<usize>,
}

impl Default for MilpParams {
    fn default() -> Self {
        MilpParams { big_m: 1000.0, eps: 1e-10, node_budget: 1_000_000, incumbent_hint: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockStatus {
    /// `robustness` is this block's exact optimum and counts toward the sum.
    Proven,
    /// Budget ran out; `robustness` is only an upper bound and the block
    /// contributes zero.
    BudgetExhausted,
    /// The solver errored; details in `error`, contribution zero.
    Failed,
}

#[derive(Debug, Clone, Serialize)]
pub struct BlockResult {
    pub id: usize,
    pub size: usize,
    pub robustness: usize,
    pub status: BlockStatus,
    pub millis: u128,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct LowerBoundReport {
    /// Sum of proven block optima: a certified lower bound on the
    /// whole-dataset robustness.
    pub lower: usize,
    pub k: usize,
    pub seed: u64,
    pub blocks: Vec<BlockResult>,
}

impl LowerBoundReport {
    /// True when every block proved its optimum, i.e. the bound lost
    /// nothing to budgets or failures.
    pub fn all_proven(&self) -> bool {
        self.blocks.iter().all(|b| b.status == BlockStatus::Proven)
    }
}

/// Solve every block of the plan and sum the proven optima. Solver failures
/// inside a block are recorded on that block, not raised.
pub fn lower_bound(
    data: &Dataset,
    target: &TestTarget,
    plan: &PartitionPlan,
    params: &MilpParams,
) -> Result<LowerBoundReport> {
    target.check_dim(data.d())?;
    let m = data.m();
    let mut seen = vec![false; m];
    for block in &plan.blocks {
        for &i in block {
            if i >= m || seen[i] {
                return Err(Error::invalid("partition plan does not match the dataset"));
            }
            seen[i] = true;
        }
    }
    if !seen.iter().all(|&s| s) {
        return Err(Error::invalid("partition plan does not cover every row"));
    }

    let blocks: Vec<BlockResult> = plan
        .blocks
        .par_iter()
        .enumerate()
        .map(|(id, rows)| {
            let started = Instant::now();
            let solved = data
                .subset(rows)
                .and_then(|block| encode(&block, target, params.big_m, params.eps))
                .and_then(|inst| bnb::solve_bnb(&inst, params.node_budget, params.incumbent_hint));
            let millis = started.elapsed().as_millis();
            match solved {
                Ok(result) => BlockResult {
                    id,
                    size: rows.len(),
                    robustness: result.robustness,
                    status: match result.status {
                        SolveStatus::Proven => BlockStatus::Proven,
                        SolveStatus::BudgetExhausted => BlockStatus::BudgetExhausted,
                    },
                    millis,
                    error: None,
                },
                Err(err) => BlockResult {
                    id,
                    size: rows.len(),
                    robustness: 0,
                    status: BlockStatus::Failed,
                    millis,
                    error: Some(err.to_string()),
                },
            }
        })
        .collect();

    let lower = blocks
        .iter()
        .filter(|b| b.status == BlockStatus::Proven)
        .map(|b| b.robustness)
        .sum();
    Ok(LowerBoundReport { lower, k: plan.k, seed: plan.seed, blocks })
}
