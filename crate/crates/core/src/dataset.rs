//! Binary-labeled datasets: CSV in/out, class selection, splitting,
//! label flipping, standardization.
//!
//! A [`Dataset`] is a dense row-major feature matrix with labels in
//! `{+1, -1}`. CSV files carry a header row; the label column is the last
//! one unless named explicitly. Raw tables with arbitrary string classes go
//! through [`binarize`] to pick two classes and map them onto `{+1, -1}`.

use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::seeds;

/// Which column of a CSV file holds the label.
#[derive(Debug, Clone, Default)]
pub enum LabelColumn {
    /// Last column (the default).
    #[default]
    Last,
    /// Column with this header name.
    Named(String),
}

/// Feature matrix plus `{+1, -1}` labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Vec<f64>,
    labels: Vec<f64>,
    m: usize,
    d: usize,
    feature_names: Option<Vec<String>>,
}

impl Dataset {
    /// Build a dataset from a row-major feature buffer of length `m * d`.
    pub fn new(
        features: Vec<f64>,
        labels: Vec<f64>,
        d: usize,
        feature_names: Option<Vec<String>>,
    ) -> Result<Self> {
        if d == 0 {
            return Err(Error::invalid("dataset needs at least one feature"));
        }
        if labels.is_empty() {
            return Err(Error::invalid("dataset needs at least one row"));
        }
        if features.len() != labels.len() * d {
            return Err(Error::invalid(format!(
                "feature buffer has {} values, expected {} rows x {} columns",
                features.len(),
                labels.len(),
                d
            )));
        }
        if let Some(v) = features.iter().find(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("non-finite feature value {v}")));
        }
        if labels.iter().any(|&y| y != 1.0 && y != -1.0) {
            return Err(Error::invalid("labels must be +1 or -1"));
        }
        if let Some(names) = &feature_names {
            if names.len() != d {
                return Err(Error::invalid(format!(
                    "{} feature names for {} columns",
                    names.len(),
                    d
                )));
            }
        }
        let m = labels.len();
        Ok(Dataset { features, labels, m, d, feature_names })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.d..(i + 1) * self.d]
    }

    pub fn label(&self, i: usize) -> f64 {
        self.labels[i]
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.features.chunks_exact(self.d)
    }

    pub fn feature_names(&self) -> Option<&[String]> {
        self.feature_names.as_deref()
    }

    /// `(positive, negative)` label counts.
    pub fn class_counts(&self) -> (usize, usize) {
        let pos = self.labels.iter().filter(|&&y| y == 1.0).count();
        (pos, self.m - pos)
    }

    /// Copy with the labels at `indices` negated. Indices must be in range
    /// and distinct.
    pub fn with_flipped(&self, indices: &[usize]) -> Result<Dataset> {
        let mut seen = vec![false; self.m];
        let mut labels = self.labels.clone();
        for &i in indices {
            if i >= self.m {
                return Err(Error::invalid(format!("flip index {i} out of range (m = {})", self.m)));
            }
            if seen[i] {
                return Err(Error::invalid(format!("flip index {i} repeated")));
            }
            seen[i] = true;
            labels[i] = -labels[i];
        }
        Ok(Dataset { labels, ..self.clone() })
    }

    /// Copy with every label replaced. Same length and ±1 rules as `new`.
    pub fn with_labels(&self, labels: Vec<f64>) -> Result<Dataset> {
        if labels.len() != self.m {
            return Err(Error::invalid(format!(
                "{} labels for {} rows",
                labels.len(),
                self.m
            )));
        }
        if labels.iter().any(|&y| y != 1.0 && y != -1.0) {
            return Err(Error::invalid("labels must be +1 or -1"));
        }
        Ok(Dataset { labels, ..self.clone() })
    }

    /// New dataset holding the given rows, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Result<Dataset> {
        if indices.is_empty() {
            return Err(Error::invalid("subset needs at least one row"));
        }
        let mut features = Vec::with_capacity(indices.len() * self.d);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            if i >= self.m {
                return Err(Error::invalid(format!("row index {i} out of range (m = {})", self.m)));
            }
            features.extend_from_slice(self.row(i));
            labels.push(self.labels[i]);
        }
        Dataset::new(features, labels, self.d, self.feature_names.clone())
    }

    /// `{m, d, class_counts}` summary.
    pub fn metadata(&self) -> Metadata {
        let (pos, neg) = self.class_counts();
        Metadata { m: self.m, d: self.d, class_counts: ClassCounts { pos, neg } }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Metadata {
    pub m: usize,
    pub d: usize,
    pub class_counts: ClassCounts,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassCounts {
    #[serde(rename = "+1")]
    pub pos: usize,
    #[serde(rename = "-1")]
    pub neg: usize,
}

/// A test point together with the label the adversary wants for it.
#[derive(Debug, Clone, PartialEq)]
pub struct TestTarget {
    pub x: Vec<f64>,
    pub y: f64,
}

impl TestTarget {
    pub fn new(x: Vec<f64>, y: f64) -> Result<Self> {
        if x.is_empty() || x.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("target features must be nonempty and finite"));
        }
        if y != 1.0 && y != -1.0 {
            return Err(Error::invalid("target label must be +1 or -1"));
        }
        Ok(TestTarget { x, y })
    }

    /// Target taken from a dataset row, asking for the opposite of its
    /// true label.
    pub fn flipped_row(data: &Dataset, i: usize) -> Result<Self> {
        if i >= data.m() {
            return Err(Error::invalid(format!("target row {i} out of range (m = {})", data.m())));
        }
        TestTarget::new(data.row(i).to_vec(), -data.label(i))
    }

    pub fn check_dim(&self, d: usize) -> Result<()> {
        if self.x.len() != d {
            return Err(Error::invalid(format!(
                "target has {} features, dataset has {d}",
                self.x.len()
            )));
        }
        Ok(())
    }
}

/// Deterministic train/test split: `test_fraction` of the rows (rounded up)
/// go to the test side.
#[derive(Debug, Clone, Copy)]
pub struct SplitSpec {
    pub test_fraction: f64,
    pub seed: u64,
}

/// CSV contents before any label mapping: features plus one string class
/// per row.
#[derive(Debug, Clone)]
pub struct RawTable {
    pub features: Vec<f64>,
    pub classes: Vec<String>,
    pub d: usize,
    pub feature_names: Vec<String>,
}

impl RawTable {
    pub fn m(&self) -> usize {
        self.classes.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.d..(i + 1) * self.d]
    }
}

fn find_label_index(headers: &[String], label: &LabelColumn, path: &str) -> Result<usize> {
    match label {
        LabelColumn::Last => {
            if headers.len() < 2 {
                return Err(Error::invalid(format!("{path}: need at least 2 columns")));
            }
            Ok(headers.len() - 1)
        }
        LabelColumn::Named(name) => headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::invalid(format!("{path}: no column named '{name}'"))),
    }
}

/// Read a headered CSV into features plus untouched class strings.
pub fn load_csv_raw(path: impl AsRef<Path>, label: &LabelColumn) -> Result<RawTable> {
    let path_str = path.as_ref().display().to_string();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path.as_ref())
        .map_err(|source| Error::Csv { path: path_str.clone(), source })?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(|source| Error::Csv { path: path_str.clone(), source })?
        .iter()
        .map(str::to_string)
        .collect();
    let label_idx = find_label_index(&headers, label, &path_str)?;
    let d = headers.len() - 1;
    let feature_names: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != label_idx)
        .map(|(_, h)| h.clone())
        .collect();

    let mut features = Vec::new();
    let mut classes = Vec::new();
    for (r, record) in reader.records().enumerate() {
        let record = record.map_err(|source| Error::Csv { path: path_str.clone(), source })?;
        let row = r + 2; // 1-based, after the header line
        if record.len() != headers.len() {
            return Err(Error::Parse {
                row,
                col: record.len(),
                msg: format!("expected {} fields, got {}", headers.len(), record.len()),
            });
        }
        for (c, field) in record.iter().enumerate() {
            if c == label_idx {
                classes.push(field.to_string());
            } else {
                let v: f64 = field.parse().map_err(|_| Error::Parse {
                    row,
                    col: c + 1,
                    msg: format!("'{field}' is not a number"),
                })?;
                if !v.is_finite() {
                    return Err(Error::Parse {
                        row,
                        col: c + 1,
                        msg: format!("non-finite value {v}"),
                    });
                }
                features.push(v);
            }
        }
    }
    if classes.is_empty() {
        return Err(Error::invalid(format!("{path_str}: no data rows")));
    }
    Ok(RawTable { features, classes, d, feature_names })
}

fn parse_binary_label(field: &str) -> Option<f64> {
    match field {
        "1" | "+1" | "1.0" => Some(1.0),
        "0" | "0.0" | "-1" | "-1.0" => Some(-1.0),
        _ => {
            let v: f64 = field.parse().ok()?;
            if v == 1.0 {
                Some(1.0)
            } else if v == 0.0 || v == -1.0 {
                Some(-1.0)
            } else {
                None
            }
        }
    }
}

/// Load a CSV whose label column already holds binary labels. Accepted label
/// spellings are `+1`/`1` and `-1`/`0`, the latter pair both mapping to `-1`.
pub fn load_csv(path: impl AsRef<Path>, label: &LabelColumn) -> Result<Dataset> {
    let raw = load_csv_raw(&path, label)?;
    let mut labels = Vec::with_capacity(raw.m());
    for (r, class) in raw.classes.iter().enumerate() {
        let y = parse_binary_label(class).ok_or_else(|| Error::Parse {
            row: r + 2,
            col: 0,
            msg: format!("label '{class}' is not one of +1, 1, 0, -1"),
        })?;
        labels.push(y);
    }
    Dataset::new(raw.features, labels, raw.d, Some(raw.feature_names))
}

fn class_matches(class: &str, wanted: &str) -> bool {
    if class == wanted {
        return true;
    }
    match (class.parse::<f64>(), wanted.parse::<f64>()) {
        (Ok(a), Ok(b)) => a == b,
        _ => false,
    }
}

/// Keep only the rows whose class is `pos` or `neg` and relabel them
/// `+1` / `-1`. Rows of any other class are dropped.
pub fn binarize(raw: &RawTable, pos: &str, neg: &str) -> Result<Dataset> {
    let (pos, neg) = (pos.trim(), neg.trim());
    if class_matches(pos, neg) {
        return Err(Error::invalid("positive and negative class must differ"));
    }
    let mut features = Vec::new();
    let mut labels = Vec::new();
    for i in 0..raw.m() {
        let class = raw.classes[i].trim();
        let y = if class_matches(class, pos) {
            1.0
        } else if class_matches(class, neg) {
            -1.0
        } else {
            continue;
        };
        features.extend_from_slice(raw.row(i));
        labels.push(y);
    }
    if labels.is_empty() {
        return Err(Error::invalid(format!("no rows with class '{pos}' or '{neg}'")));
    }
    Dataset::new(features, labels, raw.d, Some(raw.feature_names.clone()))
}

/// Split into `(train, test)`. The test side gets `ceil(m * test_fraction)`
/// rows chosen by a seeded shuffle; each side keeps the original row order.
pub fn split(data: &Dataset, spec: &SplitSpec) -> Result<(Dataset, Dataset)> {
    if !(0.0..=1.0).contains(&spec.test_fraction) {
        return Err(Error::invalid("test_fraction must be in [0, 1]"));
    }
    let m = data.m();
    let n_test = (m as f64 * spec.test_fraction).ceil() as usize;
    if n_test == 0 || n_test == m {
        return Err(Error::invalid(format!(
            "test_fraction {} leaves an empty split for m = {m}",
            spec.test_fraction
        )));
    }
    let mut order: Vec<usize> = (0..m).collect();
    order.shuffle(&mut seeds::rng(spec.seed));
    let mut test_idx = order[..n_test].to_vec();
    let mut train_idx = order[n_test..].to_vec();
    test_idx.sort_unstable();
    train_idx.sort_unstable();
    Ok((data.subset(&train_idx)?, data.subset(&test_idx)?))
}

/// Write the dataset back out as a headered CSV. Floats use the shortest
/// representation that round-trips, so `save_csv` then [`load_csv`] gives
/// back bit-identical features.
pub fn save_csv(data: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path_str = path.as_ref().display().to_string();
    let mut out = String::new();
    match data.feature_names() {
        Some(names) => {
            for name in names {
                out.push_str(name);
                out.push(',');
            }
        }
        None => {
            for j in 1..=data.d() {
                let _ = write!(out, "x{j},");
            }
        }
    }
    out.push_str("label\n");
    for i in 0..data.m() {
        for v in data.row(i) {
            let _ = write!(out, "{v},");
        }
        let _ = writeln!(out, "{}", if data.label(i) > 0.0 { "1" } else { "-1" });
    }
    std::fs::write(path.as_ref(), out).map_err(|source| Error::Io { path: path_str, source })
}

/// Per-column z-score parameters, fit on one dataset and applied to any
/// other data in the same feature space.
#[derive(Debug, Clone)]
pub struct Standardizer {
    mean: Vec<f64>,
    scale: Vec<f64>,
}

impl Standardizer {
    /// Fit means and population standard deviations. Constant columns get
    /// scale 1 so they pass through centered but undivided.
    pub fn fit(data: &Dataset) -> Self {
        let (m, d) = (data.m(), data.d());
        let mut mean = vec![0.0; d];
        for row in data.rows() {
            for (j, v) in row.iter().enumerate() {
                mean[j] += v;
            }
        }
        for v in &mut mean {
            *v /= m as f64;
        }
        let mut var = vec![0.0; d];
        for row in data.rows() {
            for (j, v) in row.iter().enumerate() {
                var[j] += (v - mean[j]).powi(2);
            }
        }
        let scale = var
            .iter()
            .map(|&v| {
                let s = (v / m as f64).sqrt();
                if s > 0.0 {
                    s
                } else {
                    1.0
                }
            })
            .collect();
        Standardizer { mean, scale }
    }

    pub fn transform_point(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(self.mean.iter().zip(&self.scale)).map(|(v, (m, s))| (v - m) / s).collect()
    }

    pub fn transform(&self, data: &Dataset) -> Result<Dataset> {
        let mut features = Vec::with_capacity(data.m() * data.d());
        for row in data.rows() {
            features.extend(self.transform_point(row));
        }
        Dataset::new(
            features,
            data.labels().to_vec(),
            data.d(),
            data.feature_names().map(<[String]>::to_vec),
        )
    }

    pub fn transform_target(&self, target: &TestTarget) -> Result<TestTarget> {
        TestTarget::new(self.transform_point(&target.x), target.y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_temp(name: &str, contents: &str) -> std::path::PathBuf {
        let path = std::env::temp_dir().join(format!("flipbound-dataset-{name}-{}", std::process::id()));
        std::fs::write(&path, contents).unwrap();
        path
    }

    #[test]
    fn load_maps_zero_one_labels() {
        let path = write_temp("zero-one", "x1,x2,label\n1.0,2.0,1\n3.0,4.0,0\n");
        let data = load_csv(&path, &LabelColumn::Last).unwrap();
        assert_eq!((data.m(), data.d()), (2, 2));
        assert_eq!(data.labels(), &[1.0, -1.0]);
        assert_eq!(data.row(1), &[3.0, 4.0]);
        assert_eq!(data.feature_names(), Some(&["x1".to_string(), "x2".to_string()][..]));
    }

    #[test]
    fn load_by_label_name() {
        let path = write_temp("named", "label,a,b\n1,0.5,0.25\n-1,1.5,2.5\n");
        let data = load_csv(&path, &LabelColumn::Named("label".into())).unwrap();
        assert_eq!((data.m(), data.d()), (2, 2));
        assert_eq!(data.row(0), &[0.5, 0.25]);
        assert_eq!(data.labels(), &[1.0, -1.0]);
    }

    #[test]
    fn load_reports_bad_cell_position() {
        let path = write_temp("bad-cell", "x1,x2,label\n1.0,2.0,1\n3.0,oops,0\n");
        match load_csv(&path, &LabelColumn::Last) {
            Err(Error::Parse { row, col, .. }) => assert_eq!((row, col), (3, 2)),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn load_rejects_unknown_label_value() {
        let path = write_temp("bad-label", "x1,label\n1.0,2\n");
        assert!(matches!(load_csv(&path, &LabelColumn::Last), Err(Error::Parse { row: 2, .. })));
    }

    #[test]
    fn binarize_drops_other_classes() {
        let path = write_temp("classes", "f1,f2,class\n1,2,a\n3,4,b\n5,6,c\n7,8,a\n");
        let raw = load_csv_raw(&path, &LabelColumn::Last).unwrap();
        let data = binarize(&raw, "a", "c").unwrap();
        assert_eq!(data.m(), 3);
        assert_eq!(data.labels(), &[1.0, -1.0, 1.0]);
        assert_eq!(data.row(1), &[5.0, 6.0]);
    }

    #[test]
    fn binarize_matches_numeric_spellings() {
        let path = write_temp("numeric-classes", "f,class\n1,4\n2,0\n3,4.0\n");
        let raw = load_csv_raw(&path, &LabelColumn::Last).unwrap();
        let data = binarize(&raw, "4", "0").unwrap();
        assert_eq!(data.labels(), &[1.0, -1.0, 1.0]);
    }

    #[test]
    fn split_sizes_round_up() {
        let data = Dataset::new((0..20).map(f64::from).collect(), vec![1.0; 10], 2, None).unwrap();
        let (train, test) = split(&data, &SplitSpec { test_fraction: 0.25, seed: 9 }).unwrap();
        assert_eq!((train.m(), test.m()), (7, 3));
        // Same seed, same split.
        let (train2, test2) = split(&data, &SplitSpec { test_fraction: 0.25, seed: 9 }).unwrap();
        assert_eq!(train, train2);
        assert_eq!(test, test2);
    }

    #[test]
    fn split_partitions_rows() {
        let m = 11;
        let features: Vec<f64> = (0..m).map(|i| i as f64).collect();
        let data = Dataset::new(features, vec![-1.0; m], 1, None).unwrap();
        let (train, test) = split(&data, &SplitSpec { test_fraction: 0.4, seed: 3 }).unwrap();
        let mut seen: Vec<f64> =
            train.rows().chain(test.rows()).map(|r| r[0]).collect();
        seen.sort_by(f64::total_cmp);
        let expected: Vec<f64> = (0..m).map(|i| i as f64).collect();
        assert_eq!(seen, expected);
    }

    #[test]
    fn flip_negates_only_requested_rows() {
        let data =
            Dataset::new(vec![0.0, 1.0, 2.0, 3.0], vec![1.0, -1.0], 2, None).unwrap();
        let flipped = data.with_flipped(&[0]).unwrap();
        assert_eq!(flipped.labels(), &[-1.0, -1.0]);
        assert_eq!(flipped.row(0), data.row(0));
        assert!(data.with_flipped(&[0, 0]).is_err());
        assert!(data.with_flipped(&[5]).is_err());
    }

    #[test]
    fn save_load_round_trips_bits() {
        let features = vec![0.1, -2.5e-7, std::f64::consts::PI, 1.0 / 3.0, 42.0, -0.0];
        let data = Dataset::new(features, vec![1.0, -1.0, 1.0], 2, None).unwrap();
        let path = std::env::temp_dir()
            .join(format!("flipbound-dataset-roundtrip-{}.csv", std::process::id()));
        save_csv(&data, &path).unwrap();
        let back = load_csv(&path, &LabelColumn::Last).unwrap();
        assert_eq!(back.labels(), data.labels());
        for i in 0..data.m() {
            for j in 0..data.d() {
                assert_eq!(back.row(i)[j].to_bits(), data.row(i)[j].to_bits());
            }
        }
    }

    #[test]
    fn metadata_counts_classes() {
        let data =
            Dataset::new(vec![0.0; 6], vec![1.0, -1.0, -1.0], 2, None).unwrap();
        let json = serde_json::to_value(data.metadata()).unwrap();
        assert_eq!(json["m"], 3);
        assert_eq!(json["d"], 2);
        assert_eq!(json["class_counts"]["+1"], 1);
        assert_eq!(json["class_counts"]["-1"], 2);
    }

    #[test]
    fn standardizer_centers_and_scales() {
        let data = Dataset::new(
            vec![0.0, 5.0, 2.0, 5.0, 4.0, 5.0],
            vec![1.0, -1.0, 1.0],
            2,
            None,
        )
        .unwrap();
        let std = Standardizer::fit(&data);
        let out = std.transform(&data).unwrap();
        // First column has mean 2 and population std sqrt(8/3).
        let s = (8.0f64 / 3.0).sqrt();
        assert!((out.row(0)[0] - (-2.0 / s)).abs() < 1e-12);
        assert!((out.row(2)[0] - (2.0 / s)).abs() < 1e-12);
        // Constant column passes through centered, scale 1.
        assert_eq!(out.row(0)[1], 0.0);
        assert_eq!(out.row(2)[1], 0.0);
    }

    #[test]
    fn rejects_bad_construction() {
        assert!(Dataset::new(vec![1.0], vec![1.0, -1.0], 1, None).is_err());
        assert!(Dataset::new(vec![1.0, f64::NAN], vec![1.0, -1.0], 1, None).is_err());
        assert!(Dataset::new(vec![1.0, 2.0], vec![1.0, 0.5], 1, None).is_err());
        assert!(Dataset::new(vec![], vec![], 1, None).is_err());
    }
}
