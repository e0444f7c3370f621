//! Experiment harness: poisoning sweeps and summary statistics.
//!
//! The central experiment measures how often an attacker gets their way as a
//! function of how much of the estimated flip budget they spend. For each
//! test point the attack computes an upper bound and its flip set with one
//! loss, then a victim model is retrained with another loss on data poisoned
//! at several fractions of that budget. Rows report rho, the frequency of
//! the attacker-desired classification across test points, next to clean
//! test accuracy. A histogram helper summarizes bound distributions.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::Serialize;

use crate::dataset::{Dataset, TestTarget};
use crate::error::{Error, Result};
use crate::seeds;
use crate::trainer::{self, LossKind, TrainConfig};
use crate::upper::upper_bound;

/// One poisoning sweep: fraction grid plus the loss pair. `attack_loss`
/// drives the budget estimate, `victim_loss` the retrained model.
#[derive(Debug, Clone, Serialize)]
pub struct PoisonSpec {
    pub fractions: Vec<f64>,
    pub seed: u64,
    pub attack_loss: LossKind,
    pub victim_loss: LossKind,
}

/// The default budget fractions: none, quarter, half, full, double, 4x.
pub const DEFAULT_FRACTIONS: [f64; 6] = [0.0, 0.25, 0.5, 1.0, 2.0, 4.0];

impl PoisonSpec {
    pub fn new(seed: u64, attack_loss: LossKind, victim_loss: LossKind) -> Self {
        PoisonSpec { fractions: DEFAULT_FRACTIONS.to_vec(), seed, attack_loss, victim_loss }
    }

    pub fn validate(&self) -> Result<()> {
        if self.fractions.is_empty() {
            return Err(Error::invalid("at least one fraction is required"));
        }
        if self.fractions.iter().any(|f| !f.is_finite() || *f < 0.0) {
            return Err(Error::invalid("fractions must be finite and nonnegative"));
        }
        if self.fractions.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::invalid("fractions must be sorted ascending"));
        }
        Ok(())
    }
}

/// Aggregates for one fraction, averaged over the contributing test points.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalRow {
    pub fraction: f64,
    /// Share of test points classified the way the attacker wanted.
    pub rho: f64,
    /// Mean clean-test accuracy, each time excluding the targeted point.
    pub accuracy: f64,
    /// Test points contributing to the averages (those whose victim
    /// training completed).
    pub n_points: usize,
}

/// One sweep's rows under its loss pair.
#[derive(Debug, Clone, Serialize)]
pub struct PairGrid {
    pub attack_loss: LossKind,
    pub victim_loss: LossKind,
    pub rows: Vec<EvalRow>,
}

/// Negate the labels at `flip_set` plus `extra` more indices drawn uniformly
/// without replacement from the rest.
pub fn poison(data: &Dataset, flip_set: &[usize], extra: usize, seed: u64) -> Result<Dataset> {
    let mut marked = vec![false; data.m()];
    for &i in flip_set {
        if i >= data.m() {
            return Err(Error::invalid(format!("flip index {i} out of range (m = {})", data.m())));
        }
        if marked[i] {
            return Err(Error::invalid(format!("flip index {i} repeated")));
        }
        marked[i] = true;
    }
    let mut complement: Vec<usize> = (0..data.m()).filter(|&i| !marked[i]).collect();
    if extra > complement.len() {
        return Err(Error::invalid(format!(
            "{extra} extra flips requested but only {} unflipped points remain",
            complement.len()
        )));
    }
    let mut rng = seeds::rng(seed);
    complement.shuffle(&mut rng);
    let mut all: Vec<usize> = flip_set.to_vec();
    all.extend_from_slice(&complement[..extra]);
    data.with_flipped(&all)
}

/// Attack-side result for one test point.
struct AttackPlan {
    upper: usize,
    flip_set: Vec<usize>,
}

/// Estimate budgets for every test row: the attacker wants each point
/// classified opposite its true label.
fn attack_plans(
    train: &Dataset,
    test: &Dataset,
    loss: LossKind,
    seed: u64,
    trials: usize,
    k_prime: Option<usize>,
) -> Result<Vec<AttackPlan>> {
    let loss_seed = seeds::derive(seed, loss.name(), 0);
    (0..test.m())
        .into_par_iter()
        .map(|i| {
            let target = TestTarget::new(test.row(i).to_vec(), -test.label(i))?;
            let cfg = TrainConfig::for_loss(loss, seeds::derive(loss_seed, "attack-target", i as u64));
            let report = upper_bound(train, &target, &cfg, trials, k_prime)?;
            Ok(AttackPlan { upper: report.upper, flip_set: report.flip_set })
        })
        .collect()
}

/// Poison `train` against test row `i` at budget `n`, reusing the attack's
/// flip set: a uniform subsample when `n` fits inside it, the whole set plus
/// random extras otherwise.
fn poison_at(
    train: &Dataset,
    plan: &AttackPlan,
    n: usize,
    seed: u64,
) -> Result<Dataset> {
    if n <= plan.flip_set.len() {
        let mut subset = plan.flip_set.clone();
        subset.shuffle(&mut seeds::rng(seed));
        subset.truncate(n);
        train.with_flipped(&subset)
    } else {
        poison(train, &plan.flip_set, n - plan.flip_set.len(), seed)
    }
}

fn grid_rows(
    train: &Dataset,
    test: &Dataset,
    plans: &[AttackPlan],
    spec: &PoisonSpec,
) -> Result<Vec<EvalRow>> {
    let pair_seed = seeds::derive(
        seeds::derive(spec.seed, spec.attack_loss.name(), 0),
        spec.victim_loss.name(),
        1,
    );
    let mut rows = Vec::with_capacity(spec.fractions.len());
    for (fi, &fraction) in spec.fractions.iter().enumerate() {
        // (hit, accuracy) per test point; None when victim training diverged.
        let outcomes: Vec<Option<(bool, f64)>> = (0..test.m())
            .into_par_iter()
            .map(|i| {
                let plan = &plans[i];
                let n = ((fraction * plan.upper as f64) + 0.5).floor() as usize;
                let n = n.min(train.m());
                let point_seed = seeds::derive(pair_seed, "grid-target", i as u64);
                let poisoned =
                    poison_at(train, plan, n, seeds::derive(point_seed, "poison", fi as u64))?;
                let cfg = TrainConfig::for_loss(
                    spec.victim_loss,
                    seeds::derive(point_seed, "victim", fi as u64),
                );
                let victim = match trainer::train(&poisoned, &cfg) {
                    Ok(clf) => clf,
                    Err(Error::Diverged { .. }) => return Ok(None),
                    Err(e) => return Err(e),
                };
                let desired = -test.label(i);
                let hit = victim.margin(test.row(i), desired) > 0.0;
                let others = test.m() - 1;
                let accuracy = if others == 0 {
                    1.0
                } else {
                    let correct = (0..test.m())
                        .filter(|&j| j != i && victim.margin(test.row(j), test.label(j)) > 0.0)
                        .count();
                    correct as f64 / others as f64
                };
                Ok(Some((hit, accuracy)))
            })
            .collect::<Result<Vec<_>>>()?;
        let done: Vec<(bool, f64)> = outcomes.into_iter().flatten().collect();
        let n_points = done.len();
        let (rho, accuracy) = if n_points == 0 {
            log::warn!("every victim training diverged at fraction {fraction}");
            (0.0, 0.0)
        } else {
            let hits = done.iter().filter(|(hit, _)| *hit).count();
            let acc: f64 = done.iter().map(|(_, a)| a).sum::<f64>() / n_points as f64;
            (hits as f64 / n_points as f64, acc)
        };
        rows.push(EvalRow { fraction, rho, accuracy, n_points });
    }
    let rho_at = |f: f64| rows.iter().find(|r| r.fraction == f).map(|r| r.rho);
    if let (Some(r0), Some(r1)) = (rho_at(0.0), rho_at(1.0)) {
        if r1 < r0 {
            log::warn!(
                "rho at the full budget ({r1:.3}) fell below the clean rate ({r0:.3}) \
                 for {} vs {}",
                spec.attack_loss,
                spec.victim_loss
            );
        }
    }
    Ok(rows)
}

/// Run one sweep. `test` is the clean held-out split: its rows are both the
/// attack targets (desired label = the negation of the true one) and, minus
/// the targeted row, the accuracy population.
pub fn evaluate_grid(
    train: &Dataset,
    test: &Dataset,
    spec: &PoisonSpec,
    trials: usize,
    k_prime: Option<usize>,
) -> Result<Vec<EvalRow>> {
    spec.validate()?;
    if train.d() != test.d() {
        return Err(Error::invalid(format!(
            "train has {} features but test has {}",
            train.d(),
            test.d()
        )));
    }
    let plans = attack_plans(train, test, spec.attack_loss, spec.seed, trials, k_prime)?;
    grid_rows(train, test, &plans, spec)
}

/// Every (attack loss, victim loss) pair over one fraction grid. Attack
/// budgets are computed once per attack loss and shared across victims, so
/// the output matches per-pair [`evaluate_grid`] calls exactly.
pub fn evaluate_all_pairs(
    train: &Dataset,
    test: &Dataset,
    fractions: &[f64],
    seed: u64,
    trials: usize,
    k_prime: Option<usize>,
) -> Result<Vec<PairGrid>> {
    let mut grids = Vec::with_capacity(LossKind::ALL.len() * LossKind::ALL.len());
    for &attack_loss in &LossKind::ALL {
        let probe = PoisonSpec {
            fractions: fractions.to_vec(),
            seed,
            attack_loss,
            victim_loss: attack_loss,
        };
        probe.validate()?;
        if train.d() != test.d() {
            return Err(Error::invalid("train and test dimensions differ"));
        }
        let plans = attack_plans(train, test, attack_loss, seed, trials, k_prime)?;
        for &victim_loss in &LossKind::ALL {
            let spec = PoisonSpec { victim_loss, ..probe.clone() };
            let rows = grid_rows(train, test, &plans, &spec)?;
            grids.push(PairGrid { attack_loss, victim_loss, rows });
        }
    }
    Ok(grids)
}

/// How to cut the value range into bins.
#[derive(Debug, Clone)]
pub enum BinSpec {
    /// Equal-width bins starting at a multiple of the width at or below the
    /// minimum value.
    Width(f64),
    /// Explicit ascending edges; bin `t` is `[e_t, e_{t+1})`, the last one
    /// closed. Every value must land inside.
    Edges(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Bin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

/// Order statistics alongside the bins.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HistogramSummary {
    pub min: usize,
    pub max: usize,
    pub mean: f64,
    pub median: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Histogram {
    pub bins: Vec<Bin>,
    pub total: usize,
    pub summary: HistogramSummary,
}

/// Nearest-rank percentile of an integer sample, `p` in [0, 100].
pub fn percentile(values: &[usize], p: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::invalid("percentile of an empty sample"));
    }
    if !(0.0..=100.0).contains(&p) {
        return Err(Error::invalid("percentile rank must be in [0, 100]"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_unstable();
    let rank = ((p / 100.0) * sorted.len() as f64).ceil() as usize;
    Ok(sorted[rank.max(1) - 1] as f64)
}

/// Bin a sample of bound values. Counts always sum to the sample size.
pub fn histogram(values: &[usize], spec: &BinSpec) -> Result<Histogram> {
    if values.is_empty() {
        return Err(Error::invalid("histogram of an empty sample"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_unstable();
    let (min, max) = (sorted[0], sorted[sorted.len() - 1]);
    let mut bins = match spec {
        BinSpec::Width(w) => {
            if !w.is_finite() || *w <= 0.0 {
                return Err(Error::invalid("bin width must be positive"));
            }
            let lo0 = (min as f64 / w).floor() * w;
            let nbins = ((max as f64 - lo0) / w).floor() as usize + 1;
            let mut bins: Vec<Bin> = (0..nbins)
                .map(|t| Bin { lo: lo0 + t as f64 * w, hi: lo0 + (t + 1) as f64 * w, count: 0 })
                .collect();
            for &v in values {
                let t = (((v as f64 - lo0) / w).floor() as usize).min(nbins - 1);
                bins[t].count += 1;
            }
            bins
        }
        BinSpec::Edges(edges) => {
            if edges.len() < 2 {
                return Err(Error::invalid("need at least two bin edges"));
            }
            if edges.iter().any(|e| !e.is_finite())
                || edges.windows(2).any(|w| w[0] >= w[1])
            {
                return Err(Error::invalid("bin edges must be finite and strictly increasing"));
            }
            let mut bins: Vec<Bin> = edges
                .windows(2)
                .map(|w| Bin { lo: w[0], hi: w[1], count: 0 })
                .collect();
            let last = bins.len() - 1;
            for &v in values {
                let v = v as f64;
                if v < edges[0] || v > edges[edges.len() - 1] {
                    return Err(Error::invalid(format!("value {v} outside the bin edges")));
                }
                // First edge strictly above v starts the next bin.
                let t = edges.partition_point(|&e| e <= v).min(last + 1);
                bins[t.max(1) - 1].count += 1;
            }
            bins
        }
    };
    bins.shrink_to_fit();
    let mean = sorted.iter().map(|&v| v as f64).sum::<f64>() / sorted.len() as f64;
    let median = if sorted.len() % 2 == 1 {
        sorted[sorted.len() / 2] as f64
    } else {
        (sorted[sorted.len() / 2 - 1] + sorted[sorted.len() / 2]) as f64 / 2.0
    };
    Ok(Histogram {
        bins,
        total: values.len(),
        summary: HistogramSummary { min, max, mean, median },
    })
}
