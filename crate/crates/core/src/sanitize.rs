//! Nearest-neighbor label cleaning and its effect on robustness.
//!
//! Each point is relabeled to the majority label among its k nearest other
//! points (Euclidean). All votes read the original labels, so the pass is
//! synchronous and order-independent. The intent is to undo small label-flip
//! attacks; [`compare_robustness`] measures whether it actually widens the
//! certified interval on a given dataset.

use rayon::prelude::*;
use serde::Serialize;

use crate::bounds::{robustness_interval, BoundsParams};
use crate::dataset::{Dataset, TestTarget};
use crate::error::{Error, Result};

/// Neighborhood size for the majority vote. The metric is always Euclidean.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SanitizeConfig {
    pub k_neighbors: usize,
}

impl Default for SanitizeConfig {
    fn default() -> Self {
        SanitizeConfig { k_neighbors: 15 }
    }
}

impl SanitizeConfig {
    fn validate(&self, m: usize) -> Result<()> {
        if self.k_neighbors == 0 {
            return Err(Error::invalid("k_neighbors must be positive"));
        }
        if self.k_neighbors > m.saturating_sub(1) {
            return Err(Error::invalid(format!(
                "k_neighbors = {} but only {} other points exist",
                self.k_neighbors,
                m.saturating_sub(1)
            )));
        }
        Ok(())
    }
}

/// What one cleaning pass did.
#[derive(Debug, Clone, Serialize)]
pub struct SanitizeReport {
    /// Indices whose label changed, ascending.
    pub changed: Vec<usize>,
    /// Whether a second pass over the new labels would change nothing.
    pub fixed_point: bool,
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// One synchronous vote pass: the label each point would take, reading
/// `labels` for every vote. Distance ties prefer the lower index; vote ties
/// keep the current label.
fn vote_pass(data: &Dataset, labels: &[f64], k: usize) -> Vec<f64> {
    (0..data.m())
        .into_par_iter()
        .map(|i| {
            let mut order: Vec<usize> = (0..data.m()).filter(|&j| j != i).collect();
            order.sort_by(|&a, &b| {
                let da = squared_distance(data.row(i), data.row(a));
                let db = squared_distance(data.row(i), data.row(b));
                da.total_cmp(&db).then(a.cmp(&b))
            });
            let tally: f64 = order[..k].iter().map(|&j| labels[j]).sum();
            if tally > 0.0 {
                1.0
            } else if tally < 0.0 {
                -1.0
            } else {
                labels[i]
            }
        })
        .collect()
}

/// Relabel every point to its neighborhood majority. Returns the cleaned
/// dataset and a report of what moved. Features are never touched.
pub fn sanitize(data: &Dataset, cfg: &SanitizeConfig) -> Result<(Dataset, SanitizeReport)> {
    cfg.validate(data.m())?;
    let new_labels = vote_pass(data, data.labels(), cfg.k_neighbors);
    let changed: Vec<usize> = (0..data.m()).filter(|&i| new_labels[i] != data.label(i)).collect();
    let cleaned = data.with_labels(new_labels)?;
    let second = vote_pass(&cleaned, cleaned.labels(), cfg.k_neighbors);
    let fixed_point = second == cleaned.labels();
    Ok((cleaned, SanitizeReport { changed, fixed_point }))
}

/// One target's certified interval before and after cleaning.
#[derive(Debug, Clone, Serialize)]
pub struct ComparisonRow {
    pub target: usize,
    pub lower_before: usize,
    pub upper_before: usize,
    pub lower_after: usize,
    pub upper_after: usize,
}

/// Per-target rows plus column means.
#[derive(Debug, Clone, Serialize)]
pub struct ComparisonTable {
    pub rows: Vec<ComparisonRow>,
    pub mean_lower_before: f64,
    pub mean_upper_before: f64,
    pub mean_lower_after: f64,
    pub mean_upper_after: f64,
    pub sanitize: SanitizeReport,
}

/// Certified robustness intervals for each target on the original and the
/// sanitized data, with column averages.
pub fn compare_robustness(
    data: &Dataset,
    targets: &[TestTarget],
    cfg: &SanitizeConfig,
    params: &BoundsParams,
) -> Result<ComparisonTable> {
    if targets.is_empty() {
        return Err(Error::invalid("no targets to compare"));
    }
    let (cleaned, report) = sanitize(data, cfg)?;
    let mut rows = Vec::with_capacity(targets.len());
    for (t, target) in targets.iter().enumerate() {
        let (before, _) = robustness_interval(data, target, params)?;
        let (after, _) = robustness_interval(&cleaned, target, params)?;
        rows.push(ComparisonRow {
            target: t,
            lower_before: before.lower.lower,
            upper_before: before.upper.upper,
            lower_after: after.lower.lower,
            upper_after: after.upper.upper,
        });
    }
    let n = rows.len() as f64;
    let mean = |f: fn(&ComparisonRow) -> usize| rows.iter().map(|r| f(r) as f64).sum::<f64>() / n;
    Ok(ComparisonTable {
        mean_lower_before: mean(|r| r.lower_before),
        mean_upper_before: mean(|r| r.upper_before),
        mean_lower_after: mean(|r| r.lower_after),
        mean_upper_after: mean(|r| r.upper_after),
        rows,
        sanitize: report,
    })
}
