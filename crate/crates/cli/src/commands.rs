//! One function per subcommand. Every command creates its output directory,
//! writes a manifest first, then its data files; human-readable progress
//! goes to stderr only. The returned number is the process exit code.

use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;
use rayon::prelude::*;
use serde::Serialize;

use flipbound::bounds::{self, BoundsParams};
use flipbound::dataset::{self, Dataset, Metadata, SplitSpec, Standardizer, TestTarget};
use flipbound::exact::{self, ExactResult, SolveStatus};
use flipbound::harness::{self, BinSpec, PairGrid, PoisonSpec};
use flipbound::linsep::LinearClassifier;
use flipbound::lower::{self, BlockStatus, MilpParams};
use flipbound::reduction;
use flipbound::sanitize::{self, SanitizeConfig};
use flipbound::seeds;
use flipbound::trainer::{LossKind, TrainConfig};
use flipbound::upper::{self, TrialRecord};

use crate::common::{
    self, BoundsParamArgs, BoxArgs, BudgetArgs, DataArgs, NamedTarget, OutArgs, TargetArgs,
    TargetFile, TrainArgs,
};

// ---------------------------------------------------------------------------
// bounds

#[derive(Debug, Args, Serialize)]
pub struct BoundsArgs {
    #[command(flatten)]
    pub data: DataArgs,

    #[command(flatten)]
    pub targets: TargetArgs,

    #[command(flatten)]
    pub params: BoundsParamArgs,

    #[command(flatten)]
    pub out: OutArgs,
}

/// Parameters echoed into the report, with the data-dependent defaults
/// resolved so the report alone documents what actually ran.
#[derive(Serialize)]
struct ParamsEcho {
    big_m: f64,
    eps: f64,
    k: Option<usize>,
    k_effective: usize,
    k_prime: Option<usize>,
    k_prime_effective: usize,
    loss: LossKind,
    trials: usize,
    node_budget: u64,
    seed: u64,
    standardize: bool,
}

/// Block outcome without its wall-clock time (that lives in the timings
/// sidecar, keeping the report a pure function of the inputs).
#[derive(Serialize)]
struct BlockEcho {
    id: usize,
    size: usize,
    robustness: usize,
    status: BlockStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

#[derive(Serialize)]
struct TargetReport {
    index: usize,
    desired_label: f64,
    lower: Option<usize>,
    upper: Option<usize>,
    lower_certified: bool,
    upper_certified: bool,
    /// Rows the winning upper-bound classifier misclassifies.
    flip_set: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    witness: Option<LinearClassifier>,
    blocks: Vec<BlockEcho>,
    trials: Vec<TrialRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

#[derive(Serialize)]
struct BoundsReport {
    params: ParamsEcho,
    data: Metadata,
    targets: Vec<TargetReport>,
}

#[derive(Serialize)]
struct TargetTiming {
    index: usize,
    upper_millis: u128,
    partition_millis: u128,
    lower_millis: u128,
    block_millis: Vec<u128>,
}

#[derive(Serialize)]
struct TimingsFile {
    targets: Vec<TargetTiming>,
}

pub fn cmd_bounds(threads: Option<usize>, args: BoundsArgs) -> Result<u8> {
    let dir = args.out.prepare()?;
    common::write_manifest(dir, "bounds", threads, &args)?;
    let (train, targets) = common::load_train_and_targets(&args.data, &args.targets)?;
    if let Some(k) = args.params.k {
        if k == 0 || k > train.m() {
            bail!("--k {k} is out of range for {} training rows", train.m());
        }
    }
    let params = args.params.to_params();

    let outcomes: Vec<(TargetReport, Option<TargetTiming>)> = targets
        .par_iter()
        .map(|nt| match bounds::robustness_interval(&train, &nt.target, &params) {
            Ok((report, timing)) => {
                log::info!(
                    "target {}: lower {} upper {}",
                    nt.index,
                    report.lower.lower,
                    report.upper.upper
                );
                let timing = TargetTiming {
                    index: nt.index,
                    upper_millis: timing.upper_millis,
                    partition_millis: timing.partition_millis,
                    lower_millis: timing.lower_millis,
                    block_millis: report.lower.blocks.iter().map(|b| b.millis).collect(),
                };
                (target_report(nt, report), Some(timing))
            }
            Err(err) => {
                log::warn!("target {} failed: {err}", nt.index);
                (failed_target(nt, err.to_string()), None)
            }
        })
        .collect();

    let mut report = BoundsReport {
        params: echo_params(&params, args.data.standardize, &train),
        data: train.metadata(),
        targets: Vec::with_capacity(outcomes.len()),
    };
    let mut timings = TimingsFile { targets: Vec::new() };
    for (target, timing) in outcomes {
        if let Some(t) = timing {
            timings.targets.push(t);
        }
        report.targets.push(target);
    }

    let mut csv = String::from("index,desired_label,lower,upper,lower_certified,upper_certified\n");
    for t in &report.targets {
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            t.index,
            t.desired_label,
            opt(t.lower),
            opt(t.upper),
            t.lower_certified,
            t.upper_certified
        ));
    }

    let path = common::write_json(dir, "report.json", &report)?;
    common::write_json(dir, "timings.json", &timings)?;
    common::write_text(dir, "summary.csv", &csv)?;

    for t in &report.targets {
        match &t.error {
            None => eprintln!(
                "target {}: lower {} ({}), upper {} ({})",
                t.index,
                opt(t.lower),
                cert(t.lower_certified),
                opt(t.upper),
                cert(t.upper_certified)
            ),
            Some(err) => eprintln!("target {}: failed: {err}", t.index),
        }
    }
    eprintln!("report: {}", path.display());
    Ok(0)
}

fn opt(v: Option<usize>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn cert(flag: bool) -> &'static str {
    if flag {
        "certified"
    } else {
        "not certified"
    }
}

fn echo_params(params: &BoundsParams, standardize: bool, train: &Dataset) -> ParamsEcho {
    ParamsEcho {
        big_m: params.big_m,
        eps: params.eps,
        k: params.k,
        k_effective: params.k.unwrap_or_else(|| lower::default_block_count(train.m(), train.d())),
        k_prime: params.k_prime,
        k_prime_effective: params.k_prime.unwrap_or(train.m() + 1),
        loss: params.loss,
        trials: params.trials,
        node_budget: params.node_budget,
        seed: params.seed,
        standardize,
    }
}

fn target_report(nt: &NamedTarget, report: bounds::IntervalReport) -> TargetReport {
    TargetReport {
        index: nt.index,
        desired_label: nt.target.y,
        lower: Some(report.lower.lower),
        upper: Some(report.upper.upper),
        lower_certified: report.lower_certified,
        upper_certified: report.upper_certified,
        flip_set: report.upper.flip_set,
        witness: report.upper.witness,
        blocks: report
            .lower
            .blocks
            .into_iter()
            .map(|b| BlockEcho {
                id: b.id,
                size: b.size,
                robustness: b.robustness,
                status: b.status,
                error: b.error,
            })
            .collect(),
        trials: report.upper.trials,
        error: None,
    }
}

fn failed_target(nt: &NamedTarget, err: String) -> TargetReport {
    TargetReport {
        index: nt.index,
        desired_label: nt.target.y,
        lower: None,
        upper: None,
        lower_certified: false,
        upper_certified: false,
        flip_set: Vec::new(),
        witness: None,
        blocks: Vec::new(),
        trials: Vec::new(),
        error: Some(err),
    }
}

// ---------------------------------------------------------------------------
// exact

#[derive(Debug, Args, Serialize)]
pub struct ExactArgs {
    #[command(flatten)]
    pub data: DataArgs,

    #[command(flatten)]
    pub targets: TargetArgs,

    #[command(flatten)]
    pub box_: BoxArgs,

    #[command(flatten)]
    pub budget: BudgetArgs,

    /// Enumerate flip sets by size instead of branch and bound
    #[arg(long)]
    pub brute: bool,

    /// Known upper bound on the optimum; lets the search prune early
    #[arg(long)]
    pub hint: Option<usize>,

    /// Also write the mixed-integer encoding in LP text form to this path
    #[arg(long)]
    pub dump_lp: Option<PathBuf>,

    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Serialize)]
struct ExactFile<'a> {
    target_index: usize,
    verified: bool,
    #[serde(flatten)]
    result: &'a ExactResult,
}

pub fn cmd_exact(threads: Option<usize>, args: ExactArgs) -> Result<u8> {
    let dir = args.out.prepare()?;
    common::write_manifest(dir, "exact", threads, &args)?;
    let (train, nt) = common::load_single_target(&args.data, &args.targets)?;

    let inst = exact::encode(&train, &nt.target, args.box_.big_m, args.box_.eps)?;
    if let Some(path) = &args.dump_lp {
        fs::write(path, inst.to_lp_text())
            .with_context(|| format!("writing {}", path.display()))?;
    }
    let result = if args.brute {
        exact::brute::brute_force(&train, &nt.target, args.box_.eps, args.box_.big_m)?
    } else {
        exact::bnb::solve_bnb(&inst, args.budget.node_budget, args.hint)?
    };
    let verified =
        exact::verify_certificate(&train, &nt.target, &result, args.box_.eps, args.box_.big_m)?;
    if !verified {
        return Err(flipbound::Error::Numerical(
            "solution failed its certificate re-check".into(),
        )
        .into());
    }
    common::write_json(
        dir,
        "exact.json",
        &ExactFile { target_index: nt.index, verified, result: &result },
    )?;

    let status = match result.status {
        SolveStatus::Proven => "proven",
        SolveStatus::BudgetExhausted => "budget exhausted; value is an upper bound",
    };
    eprintln!(
        "robustness {} with flip set {:?} ({status}, {} nodes)",
        result.robustness, result.flip_set, result.node_count
    );
    Ok(match result.status {
        SolveStatus::Proven => 0,
        SolveStatus::BudgetExhausted => 3,
    })
}

// ---------------------------------------------------------------------------
// lower

#[derive(Debug, Args, Serialize)]
pub struct LowerArgs {
    #[command(flatten)]
    pub data: DataArgs,

    #[command(flatten)]
    pub targets: TargetArgs,

    #[command(flatten)]
    pub box_: BoxArgs,

    #[command(flatten)]
    pub budget: BudgetArgs,

    /// Partition block count (default: about m / (2 (d + 1)))
    #[arg(long)]
    pub k: Option<usize>,

    /// Known upper bound on the whole-set optimum, used to prune blocks
    #[arg(long)]
    pub hint: Option<usize>,

    /// Master seed; the partition seed is derived from it
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Serialize)]
struct LowerFile {
    target_index: usize,
    lower: usize,
    k: usize,
    seed: u64,
    certified: bool,
    blocks: Vec<BlockEcho>,
}

pub fn cmd_lower(threads: Option<usize>, args: LowerArgs) -> Result<u8> {
    let dir = args.out.prepare()?;
    common::write_manifest(dir, "lower", threads, &args)?;
    let (train, nt) = common::load_single_target(&args.data, &args.targets)?;

    let k = args.k.unwrap_or_else(|| lower::default_block_count(train.m(), train.d()));
    let plan = lower::partition(&train, k, seeds::derive(args.seed, "partition", 0))?;
    let milp = MilpParams {
        big_m: args.box_.big_m,
        eps: args.box_.eps,
        node_budget: args.budget.node_budget,
        incumbent_hint: args.hint,
    };
    let report = lower::lower_bound(&train, &nt.target, &plan, &milp)?;

    let proven = report.blocks.iter().filter(|b| b.status == BlockStatus::Proven).count();
    let block_millis: Vec<u128> = report.blocks.iter().map(|b| b.millis).collect();
    let file = LowerFile {
        target_index: nt.index,
        lower: report.lower,
        k: report.k,
        seed: report.seed,
        certified: report.all_proven(),
        blocks: report
            .blocks
            .into_iter()
            .map(|b| BlockEcho {
                id: b.id,
                size: b.size,
                robustness: b.robustness,
                status: b.status,
                error: b.error,
            })
            .collect(),
    };
    common::write_json(dir, "lower.json", &file)?;
    common::write_json(dir, "timings.json", &serde_json::json!({ "block_millis": block_millis }))?;

    eprintln!("lower bound {} ({proven} of {k} blocks proven)", file.lower);
    Ok(0)
}

// ---------------------------------------------------------------------------
// upper

#[derive(Debug, Args, Serialize)]
pub struct UpperArgs {
    #[command(flatten)]
    pub data: DataArgs,

    #[command(flatten)]
    pub targets: TargetArgs,

    #[command(flatten)]
    pub box_: BoxArgs,

    #[command(flatten)]
    pub train_cfg: TrainArgs,

    /// Master seed; trial seeds are derived from it
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Serialize)]
struct UpperFile<'a> {
    target_index: usize,
    /// Independent realizability re-check of the certified flip set.
    recheck_passed: bool,
    #[serde(flatten)]
    report: &'a upper::UpperBoundReport,
}

pub fn cmd_upper(threads: Option<usize>, args: UpperArgs) -> Result<u8> {
    let dir = args.out.prepare()?;
    common::write_manifest(dir, "upper", threads, &args)?;
    let (train, nt) = common::load_single_target(&args.data, &args.targets)?;

    let base = TrainConfig {
        seed: seeds::derive(args.seed, "upper", 0),
        ..TrainConfig::for_loss(args.train_cfg.loss, 0)
    };
    let report = upper::upper_bound(
        &train,
        &nt.target,
        &base,
        args.train_cfg.trials,
        args.train_cfg.k_prime,
    )?;
    let recheck =
        upper::certify_upper(&report, &train, &nt.target, args.box_.eps, args.box_.big_m)?;

    common::write_json(
        dir,
        "upper.json",
        &UpperFile { target_index: nt.index, recheck_passed: recheck, report: &report },
    )?;
    eprintln!(
        "upper bound {} ({}, {} trials)",
        report.upper,
        cert(report.certified),
        report.trials.len()
    );
    Ok(0)
}

// ---------------------------------------------------------------------------
// poison-eval

#[derive(Debug, Args, Serialize)]
pub struct PoisonEvalArgs {
    #[command(flatten)]
    pub data: DataArgs,

    /// Held-out test CSV; without it the training file is split
    #[arg(long)]
    pub test: Option<PathBuf>,

    /// Test share of the training file when no --test is given
    #[arg(long, default_value_t = 0.25)]
    pub test_fraction: f64,

    /// Flip budgets as multiples of each target's upper bound
    #[arg(long, value_delimiter = ',')]
    pub fractions: Option<Vec<f64>>,

    /// Attack-side loss; give both losses for a single sweep, neither for
    /// the full grid of pairs
    #[arg(long, requires = "victim_loss")]
    pub attack_loss: Option<LossKind>,

    /// Victim-side loss
    #[arg(long, requires = "attack_loss")]
    pub victim_loss: Option<LossKind>,

    /// Random restarts per attack-side upper bound
    #[arg(long, default_value_t = 10)]
    pub trials: usize,

    /// Target copies appended for the attack bound (default: m + 1)
    #[arg(long)]
    pub k_prime: Option<usize>,

    /// Master seed for the split, the attacks, and the victims
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Serialize)]
struct GridsFile {
    train_rows: usize,
    test_rows: usize,
    grids: Vec<PairGrid>,
}

pub fn cmd_poison_eval(threads: Option<usize>, args: PoisonEvalArgs) -> Result<u8> {
    let dir = args.out.prepare()?;
    common::write_manifest(dir, "poison-eval", threads, &args)?;

    let full = args.data.load()?;
    let (train, test) = match &args.test {
        Some(path) => {
            let test = dataset::load_csv(path, &args.data.label_column())?;
            if test.d() != full.d() {
                bail!(
                    "{} has {} features but the training set has {}",
                    path.display(),
                    test.d(),
                    full.d()
                );
            }
            (full, test)
        }
        None => {
            let spec = SplitSpec {
                test_fraction: args.test_fraction,
                seed: seeds::derive(args.seed, "split", 0),
            };
            dataset::split(&full, &spec)?
        }
    };
    let (train, test) = if args.data.standardize {
        let scaler = Standardizer::fit(&train);
        (scaler.transform(&train)?, scaler.transform(&test)?)
    } else {
        (train, test)
    };

    let fractions =
        args.fractions.clone().unwrap_or_else(|| harness::DEFAULT_FRACTIONS.to_vec());
    let grids = match (args.attack_loss, args.victim_loss) {
        (Some(attack_loss), Some(victim_loss)) => {
            let spec = PoisonSpec { fractions, seed: args.seed, attack_loss, victim_loss };
            let rows = harness::evaluate_grid(&train, &test, &spec, args.trials, args.k_prime)?;
            vec![PairGrid { attack_loss, victim_loss, rows }]
        }
        _ => harness::evaluate_all_pairs(
            &train,
            &test,
            &fractions,
            args.seed,
            args.trials,
            args.k_prime,
        )?,
    };

    for grid in &grids {
        let mut csv = String::from("fraction,rho,accuracy,n\n");
        for row in &grid.rows {
            csv.push_str(&format!(
                "{},{},{},{}\n",
                row.fraction, row.rho, row.accuracy, row.n_points
            ));
        }
        let name =
            format!("grid_{}_{}.csv", grid.attack_loss.name(), grid.victim_loss.name());
        common::write_text(dir, &name, &csv)?;
        eprintln!(
            "{} attack vs {} victim: {} fractions, rho {} -> {}",
            grid.attack_loss,
            grid.victim_loss,
            grid.rows.len(),
            grid.rows.first().map(|r| r.rho).unwrap_or(f64::NAN),
            grid.rows.last().map(|r| r.rho).unwrap_or(f64::NAN)
        );
    }
    common::write_json(
        dir,
        "grids.json",
        &GridsFile { train_rows: train.m(), test_rows: test.m(), grids },
    )?;
    Ok(0)
}

// ---------------------------------------------------------------------------
// sanitize

#[derive(Debug, Args, Serialize)]
pub struct SanitizeArgs {
    #[command(flatten)]
    pub data: DataArgs,

    /// Neighborhood size for the majority vote
    #[arg(long, default_value_t = 15)]
    pub k_neighbors: usize,

    /// Targets for an optional before/after robustness comparison
    #[command(flatten)]
    pub targets: TargetArgs,

    #[command(flatten)]
    pub params: BoundsParamArgs,

    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Serialize)]
struct SanitizeFile {
    k_neighbors: usize,
    rows_changed: usize,
    changed: Vec<usize>,
    fixed_point: bool,
}

pub fn cmd_sanitize(threads: Option<usize>, args: SanitizeArgs) -> Result<u8> {
    let dir = args.out.prepare()?;
    common::write_manifest(dir, "sanitize", threads, &args)?;

    let loaded = args.data.load()?;
    let data = if args.data.standardize {
        Standardizer::fit(&loaded).transform(&loaded)?
    } else {
        loaded
    };
    let cfg = SanitizeConfig { k_neighbors: args.k_neighbors };
    let (cleaned, report) = sanitize::sanitize(&data, &cfg)?;
    dataset::save_csv(&cleaned, dir.join("sanitized.csv"))?;
    common::write_json(
        dir,
        "sanitize.json",
        &SanitizeFile {
            k_neighbors: args.k_neighbors,
            rows_changed: report.changed.len(),
            changed: report.changed.clone(),
            fixed_point: report.fixed_point,
        },
    )?;
    eprintln!(
        "relabeled {} of {} rows ({})",
        report.changed.len(),
        data.m(),
        if report.fixed_point { "fixed point" } else { "not a fixed point" }
    );

    if !args.targets.is_empty() {
        if args.targets.target_index.is_some() {
            bail!("the comparison takes --targets or --target-json, not --target-index");
        }
        let (base, named) = common::load_train_and_targets(&args.data, &args.targets)?;
        let targets: Vec<TestTarget> = named.into_iter().map(|n| n.target).collect();
        let table = sanitize::compare_robustness(&base, &targets, &cfg, &args.params.to_params())?;
        let mut csv = String::from("target,lower_before,upper_before,lower_after,upper_after\n");
        for row in &table.rows {
            csv.push_str(&format!(
                "{},{},{},{},{}\n",
                row.target, row.lower_before, row.upper_before, row.lower_after, row.upper_after
            ));
        }
        common::write_text(dir, "comparison.csv", &csv)?;
        common::write_json(dir, "comparison.json", &table)?;
        eprintln!(
            "mean certified interval: [{:.2}, {:.2}] before, [{:.2}, {:.2}] after",
            table.mean_lower_before,
            table.mean_upper_before,
            table.mean_lower_after,
            table.mean_upper_after
        );
    }
    Ok(0)
}

// ---------------------------------------------------------------------------
// gen-vc

#[derive(Debug, Args, Serialize)]
pub struct GenVcArgs {
    /// Vertex count for a random graph
    #[arg(long, required_unless_present = "edges", conflicts_with = "edges")]
    pub n: Option<usize>,

    /// Edge probability for the random graph
    #[arg(long, default_value_t = 0.4, conflicts_with = "edges")]
    pub p: f64,

    /// Seed for the random graph
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Read the graph from an edge-list file instead (first line the vertex
    /// count, then one "u v" pair per line)
    #[arg(long)]
    pub edges: Option<PathBuf>,

    #[command(flatten)]
    pub out: OutArgs,
}

pub fn cmd_gen_vc(threads: Option<usize>, args: GenVcArgs) -> Result<u8> {
    let dir = args.out.prepare()?;
    common::write_manifest(dir, "gen-vc", threads, &args)?;

    let graph = match &args.edges {
        Some(path) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            reduction::parse_edge_list(&text)?
        }
        None => reduction::erdos_renyi(args.n.expect("clap enforces --n"), args.p, args.seed)?,
    };
    let (data, target) = reduction::reduce(&graph)?;

    dataset::save_csv(&data, dir.join("dataset.csv"))?;
    common::write_json(dir, "target.json", &TargetFile { x: target.x.clone(), y: target.y })?;
    common::write_text(dir, "graph.txt", &reduction::to_edge_list(&graph))?;
    eprintln!(
        "graph with {} vertices and {} edges -> {} rows, {} features",
        graph.n(),
        graph.edges().len(),
        data.m(),
        data.d()
    );
    if graph.n() <= reduction::MAX_VERTICES {
        let (size, cover) = reduction::min_vertex_cover(&graph)?;
        common::write_json(dir, "cover.json", &serde_json::json!({ "size": size, "cover": cover }))?;
        eprintln!("minimum vertex cover {size} {cover:?}; exact robustness will equal {size}");
    }
    Ok(0)
}

// ---------------------------------------------------------------------------
// hist

#[derive(Debug, Args, Serialize)]
pub struct HistArgs {
    /// A report.json produced by the bounds command
    #[arg(long)]
    pub input: PathBuf,

    /// Which bound to bin: lower or upper
    #[arg(long, default_value = "upper")]
    pub field: String,

    /// Equal bin width
    #[arg(long, conflicts_with = "edges")]
    pub width: Option<f64>,

    /// Explicit ascending bin edges
    #[arg(long, value_delimiter = ',')]
    pub edges: Option<Vec<f64>>,

    /// Only bin targets whose chosen bound is certified
    #[arg(long)]
    pub certified_only: bool,

    #[command(flatten)]
    pub out: OutArgs,
}

pub fn cmd_hist(threads: Option<usize>, args: HistArgs) -> Result<u8> {
    let dir = args.out.prepare()?;
    common::write_manifest(dir, "hist", threads, &args)?;

    if args.field != "lower" && args.field != "upper" {
        bail!("--field must be lower or upper, got '{}'", args.field);
    }
    let spec = match (args.width, &args.edges) {
        (Some(w), None) => BinSpec::Width(w),
        (None, Some(e)) => BinSpec::Edges(e.clone()),
        _ => bail!("give exactly one of --width or --edges"),
    };

    let text = fs::read_to_string(&args.input)
        .with_context(|| format!("reading {}", args.input.display()))?;
    let report: serde_json::Value = serde_json::from_str(&text)
        .with_context(|| format!("parsing {}", args.input.display()))?;
    let targets = report
        .get("targets")
        .and_then(|t| t.as_array())
        .context("input is not a bounds report (no targets array)")?;
    let certified_key = format!("{}_certified", args.field);
    let mut values = Vec::new();
    for t in targets {
        if args.certified_only
            && !t.get(&certified_key).and_then(|v| v.as_bool()).unwrap_or(false)
        {
            continue;
        }
        if let Some(v) = t.get(&args.field).and_then(|v| v.as_u64()) {
            values.push(v as usize);
        }
    }
    if values.is_empty() {
        bail!("no {} values to bin in {}", args.field, args.input.display());
    }

    let hist = harness::histogram(&values, &spec)?;
    let mut csv = String::from("bin_lo,bin_hi,count\n");
    for bin in &hist.bins {
        csv.push_str(&format!("{},{},{}\n", bin.lo, bin.hi, bin.count));
    }
    common::write_text(dir, "hist.csv", &csv)?;
    common::write_json(dir, "hist.json", &hist)?;
    eprintln!(
        "{} values in {} bins; min {} max {} mean {:.3} median {}",
        hist.total,
        hist.bins.len(),
        hist.summary.min,
        hist.summary.max,
        hist.summary.mean,
        hist.summary.median
    );
    Ok(0)
}
