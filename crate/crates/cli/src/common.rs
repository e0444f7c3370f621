//! Shared plumbing: argument groups reused across subcommands, dataset and
//! target loading (including row extraction and standardization), and the
//! output-file helpers every command goes through.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use serde::{Deserialize, Serialize};

use flipbound::bounds::BoundsParams;
use flipbound::dataset::{self, Dataset, LabelColumn, Standardizer, TestTarget};
use flipbound::trainer::LossKind;

/// Training-data source shared by every data-consuming subcommand.
#[derive(Debug, Args, Serialize)]
pub struct DataArgs {
    /// Training CSV: a header line, feature columns, and one label column
    #[arg(long)]
    pub train: PathBuf,

    /// Header name of the label column (default: the last column)
    #[arg(long)]
    pub label: Option<String>,

    /// Z-score every feature with statistics fitted on the training rows
    #[arg(long)]
    pub standardize: bool,
}

impl DataArgs {
    pub fn label_column(&self) -> LabelColumn {
        match &self.label {
            Some(name) => LabelColumn::Named(name.clone()),
            None => LabelColumn::Last,
        }
    }

    pub fn load(&self) -> Result<Dataset> {
        Ok(dataset::load_csv(&self.train, &self.label_column())?)
    }
}

/// Where the attack targets come from. Exactly one source must be given.
#[derive(Debug, Args, Serialize)]
pub struct TargetArgs {
    /// Comma-separated row indices of --train to attack; the rows are
    /// removed from the training set and each desired label is the
    /// negation of the recorded one
    #[arg(long, value_delimiter = ',', conflicts_with_all = ["targets", "target_json"])]
    pub target_index: Option<Vec<usize>>,

    /// CSV of target rows whose label column holds the desired labels
    #[arg(long, conflicts_with = "target_json")]
    pub targets: Option<PathBuf>,

    /// JSON file with a single target: {"x": [...], "y": 1.0 or -1.0}
    #[arg(long)]
    pub target_json: Option<PathBuf>,
}

impl TargetArgs {
    pub fn is_empty(&self) -> bool {
        self.target_index.is_none() && self.targets.is_none() && self.target_json.is_none()
    }
}

/// On-disk form of a single target, shared with `gen-vc` output.
#[derive(Debug, Serialize, Deserialize)]
pub struct TargetFile {
    pub x: Vec<f64>,
    pub y: f64,
}

/// A target plus the index it is reported under: the original row index
/// for --target-index, the file ordinal otherwise.
pub struct NamedTarget {
    pub index: usize,
    pub target: TestTarget,
}

/// Load the training set and the targets, honoring row extraction and
/// standardization. The returned training set is exactly what the solvers
/// see; the scaler, when requested, is fitted on it alone.
pub fn load_train_and_targets(
    data_args: &DataArgs,
    target_args: &TargetArgs,
) -> Result<(Dataset, Vec<NamedTarget>)> {
    let full = data_args.load()?;
    let (train, mut targets) = if let Some(indices) = &target_args.target_index {
        if indices.is_empty() {
            bail!("--target-index needs at least one row");
        }
        let mut picked = indices.clone();
        picked.sort_unstable();
        picked.dedup();
        if picked.len() != indices.len() {
            bail!("--target-index lists the same row twice");
        }
        let named = picked
            .iter()
            .map(|&i| Ok(NamedTarget { index: i, target: TestTarget::flipped_row(&full, i)? }))
            .collect::<Result<Vec<_>>>()?;
        let keep: Vec<usize> = (0..full.m()).filter(|i| picked.binary_search(i).is_err()).collect();
        if keep.is_empty() {
            bail!("every training row was taken as a target");
        }
        (full.subset(&keep)?, named)
    } else if let Some(path) = &target_args.targets {
        let table = dataset::load_csv(path, &data_args.label_column())?;
        if table.d() != full.d() {
            bail!(
                "{} has {} features but the training set has {}",
                path.display(),
                table.d(),
                full.d()
            );
        }
        let named = (0..table.m())
            .map(|i| {
                Ok(NamedTarget {
                    index: i,
                    target: TestTarget::new(table.row(i).to_vec(), table.label(i))?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        (full, named)
    } else if let Some(path) = &target_args.target_json {
        let text =
            fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let file: TargetFile = serde_json::from_str(&text)
            .with_context(|| format!("parsing {}", path.display()))?;
        (full, vec![NamedTarget { index: 0, target: TestTarget::new(file.x, file.y)? }])
    } else {
        bail!("no targets: give --target-index, --targets, or --target-json");
    };

    if data_args.standardize {
        let scaler = Standardizer::fit(&train);
        let train = scaler.transform(&train)?;
        for t in &mut targets {
            t.target = scaler.transform_target(&t.target)?;
        }
        return Ok((train, targets));
    }
    Ok((train, targets))
}

/// Same, for the commands that operate on one target.
pub fn load_single_target(
    data_args: &DataArgs,
    target_args: &TargetArgs,
) -> Result<(Dataset, NamedTarget)> {
    let (train, mut targets) = load_train_and_targets(data_args, target_args)?;
    if targets.len() != 1 {
        bail!("this command takes exactly one target, got {}", targets.len());
    }
    Ok((train, targets.remove(0)))
}

/// Weight box and margin for the exact encodings.
#[derive(Debug, Args, Serialize)]
pub struct BoxArgs {
    /// Half-width of the weight and intercept box in the exact encodings
    #[arg(long = "M", default_value_t = 1000.0)]
    pub big_m: f64,

    /// Strict-margin epsilon separating the two label cases
    #[arg(long, default_value_t = 1e-10)]
    pub eps: f64,
}

/// Branch-and-bound budget.
#[derive(Debug, Args, Serialize)]
pub struct BudgetArgs {
    /// Node budget for each branch-and-bound search
    #[arg(long, default_value_t = 1_000_000)]
    pub node_budget: u64,
}

/// Training knobs for the heuristic upper bound.
#[derive(Debug, Args, Serialize)]
pub struct TrainArgs {
    /// Surrogate loss: hinge, log, or modified-huber
    #[arg(long, default_value = "hinge")]
    pub loss: LossKind,

    /// Random restarts per upper-bound attempt
    #[arg(long, default_value_t = 10)]
    pub trials: usize,

    /// Target copies appended before training (default: m + 1)
    #[arg(long)]
    pub k_prime: Option<usize>,
}

/// The full parameter bag of the interval computation, reused wherever a
/// command runs both bounds.
#[derive(Debug, Args, Serialize)]
pub struct BoundsParamArgs {
    #[command(flatten)]
    pub box_: BoxArgs,

    #[command(flatten)]
    pub budget: BudgetArgs,

    /// Partition block count (default: about m / (2 (d + 1)))
    #[arg(long)]
    pub k: Option<usize>,

    #[command(flatten)]
    pub train_cfg: TrainArgs,

    /// Master seed; every module seed is derived from it
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl BoundsParamArgs {
    pub fn to_params(&self) -> BoundsParams {
        BoundsParams {
            big_m: self.box_.big_m,
            eps: self.box_.eps,
            k: self.k,
            k_prime: self.train_cfg.k_prime,
            loss: self.train_cfg.loss,
            trials: self.train_cfg.trials,
            node_budget: self.budget.node_budget,
            seed: self.seed,
        }
    }
}

/// Output directory; every command writes its files and manifest here.
#[derive(Debug, Args, Serialize)]
pub struct OutArgs {
    /// Output directory, created if missing
    #[arg(long)]
    pub out: PathBuf,
}

impl OutArgs {
    pub fn prepare(&self) -> Result<&Path> {
        fs::create_dir_all(&self.out)
            .with_context(|| format!("creating {}", self.out.display()))?;
        Ok(&self.out)
    }
}

/// Serialize as pretty JSON with a trailing newline. Field order comes from
/// the struct definitions and float formatting is shortest-round-trip, so
/// equal values always produce identical bytes.
pub fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<PathBuf> {
    let path = dir.join(name);
    let mut text = serde_json::to_string_pretty(value).context("serializing output")?;
    text.push('\n');
    fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

pub fn write_text(dir: &Path, name: &str, text: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

#[derive(Serialize)]
struct Manifest<'a, T: Serialize> {
    command: &'static str,
    tool: &'static str,
    version: &'static str,
    threads: Option<usize>,
    args: &'a T,
}

/// Record everything needed to replay the run: the subcommand, the binary
/// version, and the complete argument set including paths and seeds.
pub fn write_manifest<T: Serialize>(
    dir: &Path,
    command: &'static str,
    threads: Option<usize>,
    args: &T,
) -> Result<()> {
    let manifest = Manifest {
        command,
        tool: "flipbound",
        version: env!("CARGO_PKG_VERSION"),
        threads,
        args,
    };
    write_json(dir, "manifest.json", &manifest)?;
    Ok(())
}
