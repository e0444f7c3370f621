//! Lower and upper robustness bounds for one target, chained.
//!
//! The upper bound (augmentation training) runs first because it is cheap
//! and, when certified, bounds every block optimum of the partition stage,
//! so the exact block solves can prune against it. The partition lower
//! bound follows. Both certificates are independent; either side may fail
//! (budget, divergence) without invalidating the other.

use std::time::Instant;

use serde::Serialize;

use crate::dataset::{Dataset, TestTarget};
use crate::error::Result;
use crate::lower::{self, LowerBoundReport, MilpParams};
use crate::seeds;
use crate::trainer::{LossKind, TrainConfig};
use crate::upper::{self, UpperBoundReport};

/// Everything the interval computation needs besides the data.
#[derive(Debug, Clone, Serialize)]
pub struct BoundsParams {
    pub big_m: f64,
    pub eps: f64,
    /// Partition block count; `None` picks blocks of about `2 (d + 1)` rows.
    pub k: Option<usize>,
    /// Target copies appended for the upper bound; `None` means `m + 1`.
    pub k_prime: Option<usize>,
    pub loss: LossKind,
    pub trials: usize,
    pub node_budget: u64,
    pub seed: u64,
}

impl BoundsParams {
    pub fn new(seed: u64) -> Self {
        BoundsParams {
            big_m: 1000.0,
            eps: 1e-10,
            k: None,
            k_prime: None,
            loss: LossKind::Hinge,
            trials: 10,
            node_budget: 1_000_000,
            seed,
        }
    }
}

/// Both bounds plus their certification state.
#[derive(Debug, Clone, Serialize)]
pub struct IntervalReport {
    pub lower: LowerBoundReport,
    pub upper: UpperBoundReport,
    /// Every block proved its optimum.
    pub lower_certified: bool,
    /// Some trial certified the upper bound.
    pub upper_certified: bool,
}

impl IntervalReport {
    /// `[lower, upper]` as reported; the interval brackets the true
    /// robustness whenever the respective sides are certified.
    pub fn interval(&self) -> (usize, usize) {
        (self.lower.lower, self.upper.upper)
    }
}

/// Wall-clock phase times, kept apart from the report so the report itself
/// is a pure function of the inputs.
#[derive(Debug, Clone, Serialize)]
pub struct PhaseTimings {
    pub upper_millis: u128,
    pub partition_millis: u128,
    pub lower_millis: u128,
}

/// Compute both bounds for one target.
pub fn robustness_interval(
    data: &Dataset,
    target: &TestTarget,
    params: &BoundsParams,
) -> Result<(IntervalReport, PhaseTimings)> {
    target.check_dim(data.d())?;

    let started = Instant::now();
    let base = TrainConfig {
        seed: seeds::derive(params.seed, "upper", 0),
        ..TrainConfig::for_loss(params.loss, 0)
    };
    let upper = upper::upper_bound(data, target, &base, params.trials, params.k_prime)?;
    let upper_millis = started.elapsed().as_millis();

    let started = Instant::now();
    let k = params.k.unwrap_or_else(|| lower::default_block_count(data.m(), data.d()));
    let plan = lower::partition(data, k, seeds::derive(params.seed, "partition", 0))?;
    let partition_millis = started.elapsed().as_millis();

    let started = Instant::now();
    let milp = MilpParams {
        big_m: params.big_m,
        eps: params.eps,
        node_budget: params.node_budget,
        // A certified upper bound for the whole set bounds each block's
        // optimum as well, so the block searches may prune with it.
        incumbent_hint: upper.certified.then_some(upper.upper),
    };
    let lower = lower::lower_bound(data, target, &plan, &milp)?;
    let lower_millis = started.elapsed().as_millis();

    let report = IntervalReport {
        lower_certified: lower.all_proven(),
        upper_certified: upper.certified,
        lower,
        upper,
    };
    Ok((report, PhaseTimings { upper_millis, partition_millis, lower_millis }))
}
