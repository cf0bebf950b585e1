//! Tabular datasets: loading, preprocessing, stratified folds and PU masking.
//!
//! All operations are deterministic given their inputs and seed. Indices are
//! zero-based row numbers into [`Dataset::features`].

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

use ndarray::{Array1, Array2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::{Error, Label, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub features: Array2<f64>,
    pub labels: Vec<Label>,
    pub feature_names: Vec<String>,
}

impl Dataset {
    pub fn new(
        name: impl Into<String>,
        features: Array2<f64>,
        labels: Vec<Label>,
        feature_names: Vec<String>,
    ) -> Result<Self> {
        let (n, d) = features.dim();
        if n < 2 {
            return Err(Error::InvalidDataset(format!("need at least 2 rows, got {n}")));
        }
        if d < 1 {
            return Err(Error::InvalidDataset("need at least one feature".into()));
        }
        if labels.len() != n {
            return Err(Error::DimensionMismatch { expected: n, actual: labels.len() });
        }
        if feature_names.len() != d {
            return Err(Error::DimensionMismatch { expected: d, actual: feature_names.len() });
        }
        if let Some(((row, col), _)) = features.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::InvalidDataset(format!(
                "non-finite value at row {row}, column `{}`",
                feature_names[col]
            )));
        }
        let positives = labels.iter().filter(|l| l.is_positive()).count();
        if positives == 0 || positives == n {
            return Err(Error::InvalidDataset(format!(
                "labels must contain both classes ({positives} positive of {n})"
            )));
        }
        Ok(Dataset { name: name.into(), features, labels, feature_names })
    }

    pub fn n_instances(&self) -> usize {
        self.features.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.features.ncols()
    }

    pub fn positive_count(&self) -> usize {
        self.labels.iter().filter(|l| l.is_positive()).count()
    }

    /// Rows of the feature matrix in the given order.
    pub fn rows(&self, indices: &[usize]) -> Array2<f64> {
        self.features.select(Axis(0), indices)
    }

    fn column_index(&self, column: &str) -> Result<usize> {
        self.feature_names.iter().position(|c| c == column).ok_or_else(|| Error::MissingColumn(column.to_string()))
    }

    /// Returns a copy without the named feature columns.
    pub fn drop_columns(&self, columns: &[String]) -> Result<Dataset> {
        let drop: Vec<usize> = columns.iter().map(|c| self.column_index(c)).collect::<Result<_>>()?;
        let keep: Vec<usize> = (0..self.n_features()).filter(|j| !drop.contains(j)).collect();
        Dataset::new(
            self.name.clone(),
            self.features.select(Axis(1), &keep),
            self.labels.clone(),
            keep.iter().map(|&j| self.feature_names[j].clone()).collect(),
        )
    }
}

/// Which CSV column holds the class label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LabelColumn {
    Name(String),
    Index(usize),
}

impl LabelColumn {
    /// Interprets a bare non-negative integer as a column index, anything else as a name.
    pub fn from_arg(arg: &str) -> Self {
        match arg.parse::<usize>() {
            Ok(i) => LabelColumn::Index(i),
            Err(_) => LabelColumn::Name(arg.to_string()),
        }
    }
}

impl std::fmt::Display for LabelColumn {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LabelColumn::Name(n) => f.write_str(n),
            LabelColumn::Index(i) => write!(f, "{i}"),
        }
    }
}

/// How the raw label column is mapped onto {+1, −1}.
#[derive(Debug, Clone, PartialEq)]
pub enum LabelRule {
    /// Raw value equal to this string (or numerically equal) is +1.
    Equals(String),
    /// Numeric raw value at most this threshold is +1.
    AtMost(f64),
}

#[derive(Debug, Clone)]
pub struct CsvOptions {
    pub label_column: LabelColumn,
    pub label_rule: LabelRule,
    pub drop_columns: Vec<String>,
}

/// Loads a headered, comma-delimited CSV. Every non-label, non-dropped column
/// must be numeric.
pub fn load_csv(path: impl AsRef<Path>, label_column: LabelColumn, positive_label: &str) -> Result<Dataset> {
    load_csv_with(
        path,
        &CsvOptions {
            label_column,
            label_rule: LabelRule::Equals(positive_label.to_string()),
            drop_columns: Vec::new(),
        },
    )
}

pub fn load_csv_with(path: impl AsRef<Path>, opts: &CsvOptions) -> Result<Dataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| Error::Io { path: path.into(), source })?;
    let csv_err = |source| Error::Csv { path: path.into(), source };
    let mut reader =
        csv::ReaderBuilder::new().has_headers(true).comment(Some(b'#')).trim(csv::Trim::All).from_reader(file);

    let header: Vec<String> = reader.headers().map_err(csv_err)?.iter().map(String::from).collect();
    let label_idx = match &opts.label_column {
        LabelColumn::Name(name) => {
            header.iter().position(|h| h == name).ok_or_else(|| Error::MissingColumn(name.clone()))?
        }
        LabelColumn::Index(i) if *i < header.len() => *i,
        LabelColumn::Index(i) => return Err(Error::MissingColumn(format!("index {i}"))),
    };
    for col in &opts.drop_columns {
        if !header.contains(col) {
            return Err(Error::MissingColumn(col.clone()));
        }
    }
    let feature_cols: Vec<usize> =
        (0..header.len()).filter(|&j| j != label_idx && !opts.drop_columns.contains(&header[j])).collect();

    let mut values = Vec::new();
    let mut labels = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(csv_err)?;
        for &j in &feature_cols {
            let raw = record.get(j).unwrap_or("");
            let v: f64 =
                raw.parse().map_err(|_| Error::Parse { row, column: header[j].clone(), value: raw.to_string() })?;
            values.push(v);
        }
        let raw = record.get(label_idx).unwrap_or("");
        let label = match &opts.label_rule {
            LabelRule::Equals(pos) => {
                let numeric_eq = matches!(
                    (raw.parse::<f64>(), pos.parse::<f64>()),
                    (Ok(a), Ok(b)) if a == b
                );
                raw == pos || numeric_eq
            }
            LabelRule::AtMost(t) => {
                let v: f64 = raw.parse().map_err(|_| Error::Parse {
                    row,
                    column: header[label_idx].clone(),
                    value: raw.to_string(),
                })?;
                v <= *t
            }
        };
        labels.push(if label { Label::Positive } else { Label::Negative });
    }

    let n = labels.len();
    let features =
        Array2::from_shape_vec((n, feature_cols.len()), values).map_err(|e| Error::InvalidDataset(e.to_string()))?;
    let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    Dataset::new(name, features, labels, feature_cols.iter().map(|&j| header[j].clone()).collect())
}

/// Per-feature z-score parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub mean: Array1<f64>,
    /// Population standard deviation; zero-variance features keep scale 1.
    pub scale: Array1<f64>,
}

impl Standardizer {
    pub fn fit(features: &Array2<f64>, stats_source: &[usize]) -> Result<Self> {
        if stats_source.is_empty() {
            return Err(Error::InvalidArgument("standardization needs at least one row".into()));
        }
        if let Some(&bad) = stats_source.iter().find(|&&i| i >= features.nrows()) {
            return Err(Error::IndexOutOfRange { index: bad, len: features.nrows() });
        }
        let rows = features.select(Axis(0), stats_source);
        let m = rows.nrows() as f64;
        let mean = rows.sum_axis(Axis(0)) / m;
        let var: Array1<f64> =
            rows.axis_iter(Axis(0)).fold(Array1::zeros(features.ncols()), |acc, r| acc + (&r - &mean).mapv(|v| v * v))
                / m;
        let scale = var.mapv(|v: f64| if v > 0.0 { v.sqrt() } else { 1.0 });
        Ok(Standardizer { mean, scale })
    }

    pub fn apply(&self, features: &Array2<f64>) -> Array2<f64> {
        (features - &self.mean) / &self.scale
    }
}

/// Z-scores every feature using statistics computed only over `stats_source`.
pub fn standardize(d: &Dataset, stats_source: &[usize]) -> Result<Dataset> {
    let s = Standardizer::fit(&d.features, stats_source)?;
    Ok(Dataset { features: s.apply(&d.features), ..d.clone() })
}

/// Relabels rows by a threshold on a numeric feature column: `value <= threshold` is +1.
pub fn binarize(d: &Dataset, column: &str, threshold: f64, drop_column: bool) -> Result<Dataset> {
    let j = d.column_index(column)?;
    let labels =
        d.features.column(j).iter().map(|&v| if v <= threshold { Label::Positive } else { Label::Negative }).collect();
    let relabeled = Dataset::new(d.name.clone(), d.features.clone(), labels, d.feature_names.clone())?;
    if drop_column {
        relabeled.drop_columns(&[column.to_string()])
    } else {
        Ok(relabeled)
    }
}

/// Round half up, tolerant of representation error just below the half.
pub(crate) fn round_half_up(x: f64) -> usize {
    (x + 0.5 + 1e-9).floor().max(0.0) as usize
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldPlan {
    pub k: usize,
    pub seed: u64,
    pub n: usize,
    /// Sorted test indices of each fold.
    pub test_sets: Vec<Vec<usize>>,
}

impl FoldPlan {
    /// Sorted complement of the fold's test set.
    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        let test: HashSet<usize> = self.test_sets[fold].iter().copied().collect();
        (0..self.n).filter(|i| !test.contains(i)).collect()
    }

    /// Plain-text manifest: a header comment, then one space-separated test set per line.
    pub fn to_manifest(&self) -> String {
        let mut out = format!("# folds k={} seed={} n={}\n", self.k, self.seed, self.n);
        for set in &self.test_sets {
            out.push_str(&join_indices(set));
            out.push('\n');
        }
        out
    }

    pub fn from_manifest(text: &str) -> Result<FoldPlan> {
        let mut lines = text.lines().skip_while(|l| !l.starts_with("# folds k="));
        let header = lines.next().ok_or_else(|| Error::InvalidArgument("manifest lacks a folds header".into()))?;
        let field = |key: &str| -> Result<u64> {
            header
                .split_whitespace()
                .find_map(|t| t.strip_prefix(key))
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| Error::InvalidArgument(format!("manifest header lacks {key}")))
        };
        let (k, seed, n) = (field("k=")? as usize, field("seed=")?, field("n=")? as usize);
        let test_sets = lines.map(parse_indices).collect::<Result<Vec<_>>>()?;
        if test_sets.len() != k {
            return Err(Error::InvalidArgument(format!("expected {k} folds, found {}", test_sets.len())));
        }
        Ok(FoldPlan { k, seed, n, test_sets })
    }
}

fn join_indices(indices: &[usize]) -> String {
    let mut s = String::with_capacity(indices.len() * 5);
    for (i, idx) in indices.iter().enumerate() {
        if i > 0 {
            s.push(' ');
        }
        let _ = write!(s, "{idx}");
    }
    s
}

fn parse_indices(line: &str) -> Result<Vec<usize>> {
    line.split_whitespace().map(|t| t.parse().map_err(|_| Error::InvalidArgument(format!("bad index `{t}`")))).collect()
}

/// Stratified k-fold split. Each class is shuffled with the seed and dealt
/// round-robin across folds, continuing the deal between classes so that fold
/// sizes differ by at most one.
pub fn stratified_k_fold(d: &Dataset, k: usize, seed: u64) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!("k must be at least 2, got {k}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut test_sets = vec![Vec::new(); k];
    let mut slot = 0;
    for class in [Label::Positive, Label::Negative] {
        let mut members: Vec<usize> = (0..d.n_instances()).filter(|&i| d.labels[i] == class).collect();
        if members.len() < k {
            return Err(Error::InvalidArgument(format!(
                "class {class} has {} instances, fewer than k = {k}",
                members.len()
            )));
        }
        members.shuffle(&mut rng);
        for i in members {
            test_sets[slot % k].push(i);
            slot += 1;
        }
    }
    for set in &mut test_sets {
        set.sort_unstable();
    }
    Ok(FoldPlan { k, seed, n: d.n_instances(), test_sets })
}

/// The PU masking of a training set: a few labeled positives `P` and the
/// unlabeled rest `U`. `unlabeled_truth` is aligned with `unlabeled` and is
/// for evaluation only.
#[derive(Debug, Clone, PartialEq)]
pub struct PuView {
    pub positive: Vec<usize>,
    pub unlabeled: Vec<usize>,
    pub unlabeled_truth: Vec<Label>,
    pub labeled_fraction: f64,
}

impl PuView {
    pub fn to_manifest(&self) -> String {
        format!(
            "# pu labeled_fraction={}\nP: {}\nU: {}\n",
            self.labeled_fraction,
            join_indices(&self.positive),
            join_indices(&self.unlabeled)
        )
    }
}

/// Hides the labels of all training instances except a seeded random
/// `round(f · n⁺)` subset of the training positives.
pub fn make_pu_view(d: &Dataset, train_indices: &[usize], f: f64, seed: u64) -> Result<PuView> {
    if !(f > 0.0 && f <= 1.0) {
        return Err(Error::InvalidArgument(format!("labeled fraction must be in (0, 1], got {f}")));
    }
    if let Some(&bad) = train_indices.iter().find(|&&i| i >= d.n_instances()) {
        return Err(Error::IndexOutOfRange { index: bad, len: d.n_instances() });
    }
    let positives: Vec<usize> = train_indices.iter().copied().filter(|&i| d.labels[i].is_positive()).collect();
    if positives.is_empty() {
        return Err(Error::InvalidArgument("training indices contain no positives".into()));
    }
    let m = round_half_up(f * positives.len() as f64).min(positives.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen: Vec<usize> =
        rand::seq::index::sample(&mut rng, positives.len(), m).into_iter().map(|j| positives[j]).collect();
    chosen.sort_unstable();
    let in_p: HashSet<usize> = chosen.iter().copied().collect();
    let unlabeled: Vec<usize> = train_indices.iter().copied().filter(|i| !in_p.contains(i)).collect();
    let unlabeled_truth = unlabeled.iter().map(|&i| d.labels[i]).collect();
    Ok(PuView { positive: chosen, unlabeled, unlabeled_truth, labeled_fraction: f })
}
