//! F-measure and the cross-validation experiment protocol.
//!
//! Every experiment follows the same per-fold recipe: standardize with
//! statistics of the training fold, mask the training fold into a PU view,
//! fit the method, and score its final classifier on the held-out test fold.
//! Fold plans and PU masks depend only on the seed, so different methods,
//! band widths and labeled fractions see identical splits.

use std::fmt::Write as _;
use std::str::FromStr;

use ndarray::Array2;
use rayon::prelude::*;

use crate::baselines::{self, SpyConfig};
use crate::classifiers::{ClassifierKind, TrainedClassifier};
use crate::dataset::{self, Dataset, FoldPlan, PuView, Standardizer};
use crate::pufc::{self, EpsilonBand};
use crate::smuc::SmucConfig;
use crate::{Error, Label, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsResult {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
    pub precision: f64,
    pub recall: f64,
    pub f_measure: f64,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Confusion counts with +1 as the positive class.
pub fn confusion(y_true: &[Label], y_pred: &[Label]) -> Result<MetricsResult> {
    if y_true.len() != y_pred.len() {
        return Err(Error::DimensionMismatch { expected: y_true.len(), actual: y_pred.len() });
    }
    if y_true.is_empty() {
        return Err(Error::InvalidArgument("cannot score an empty prediction".into()));
    }
    let (mut tp, mut fp, mut fn_, mut tn) = (0, 0, 0, 0);
    for (t, p) in y_true.iter().zip(y_pred) {
        match (t.is_positive(), p.is_positive()) {
            (true, true) => tp += 1,
            (false, true) => fp += 1,
            (true, false) => fn_ += 1,
            (false, false) => tn += 1,
        }
    }
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    let f_measure = f_measure(precision, recall)?;
    Ok(MetricsResult { tp, fp, fn_, tn, precision, recall, f_measure })
}

/// Harmonic mean of precision and recall; zero when both are zero.
pub fn f_measure(precision: f64, recall: f64) -> Result<f64> {
    for v in [precision, recall] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::InvalidArgument(format!("precision and recall must lie in [0, 1], got {v}")));
        }
    }
    if precision + recall == 0.0 {
        return Ok(0.0);
    }
    Ok(2.0 * precision * recall / (precision + recall))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Pufc,
    Spy,
    Basic,
    Pruning,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Pufc, Method::Spy, Method::Basic, Method::Pruning];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Pufc => "pufc",
            Method::Spy => "spy",
            Method::Basic => "basic",
            Method::Pruning => "pruning",
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::Unknown { kind: "method", name: s.to_string() })
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

pub const DEFAULT_EPSILON_GRID: [f64; 10] = [0.0, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45];
pub const DEFAULT_FRACTIONS: [f64; 5] = [0.2, 0.3, 0.4, 0.5, 0.6];
pub const DEFAULT_INNER_FOLDS: usize = 3;

/// Band width used by PUFC: fixed, or chosen per outer fold by an inner
/// cross-validation on that fold's training data.
#[derive(Debug, Clone, PartialEq)]
pub enum EpsilonChoice {
    Fixed(f64),
    Tuned { grid: Vec<f64>, inner_folds: usize },
}

impl EpsilonChoice {
    pub fn tuned_default() -> Self {
        EpsilonChoice::Tuned { grid: DEFAULT_EPSILON_GRID.to_vec(), inner_folds: DEFAULT_INNER_FOLDS }
    }

    pub fn label(&self) -> String {
        match self {
            EpsilonChoice::Fixed(e) => e.to_string(),
            EpsilonChoice::Tuned { .. } => "tuned".to_string(),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            EpsilonChoice::Fixed(e) => EpsilonBand::new(*e).map(|_| ()),
            EpsilonChoice::Tuned { grid, inner_folds } => {
                if grid.is_empty() {
                    return Err(Error::InvalidArgument("epsilon grid is empty".into()));
                }
                if *inner_folds < 2 {
                    return Err(Error::InvalidArgument("inner folds must be at least 2".into()));
                }
                grid.iter().try_for_each(|&e| EpsilonBand::new(e).map(|_| ()))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub method: Method,
    pub labeled_fraction: f64,
    pub epsilon: EpsilonChoice,
    pub folds: usize,
    pub seed: u64,
    pub classifier: ClassifierKind,
    pub smuc: SmucConfig,
    pub spy_ratio: f64,
    pub noise_level: f64,
    /// Iteration cap of the Basic and Pruning loops.
    pub pu_max_iter: usize,
    pub standardize: bool,
    pub parallel: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            method: Method::Pufc,
            labeled_fraction: 0.3,
            epsilon: EpsilonChoice::Fixed(0.1),
            folds: 10,
            seed: 0,
            classifier: ClassifierKind::NearestCentroid,
            smuc: SmucConfig::default(),
            spy_ratio: baselines::DEFAULT_SPY_RATIO,
            noise_level: baselines::DEFAULT_NOISE_LEVEL,
            pu_max_iter: baselines::DEFAULT_MAX_ITER,
            standardize: true,
            parallel: true,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.labeled_fraction > 0.0 && self.labeled_fraction <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "labeled fraction must be in (0, 1], got {}",
                self.labeled_fraction
            )));
        }
        if self.folds < 2 {
            return Err(Error::InvalidArgument("folds must be at least 2".into()));
        }
        if !(self.spy_ratio > 0.0 && self.spy_ratio < 1.0) {
            return Err(Error::InvalidArgument(format!("spy ratio must be in (0, 1), got {}", self.spy_ratio)));
        }
        if !(0.0..1.0).contains(&self.noise_level) {
            return Err(Error::InvalidArgument(format!("noise level must be in [0, 1), got {}", self.noise_level)));
        }
        self.smuc.validate()?;
        self.epsilon.validate()
    }
}

/// SplitMix64 finaliser; derives independent per-fold seeds from the run seed.
pub fn derive_seed(seed: u64, fold: usize, stream: u64) -> u64 {
    let mut z = seed
        .wrapping_add((fold as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(stream.wrapping_mul(0xD1B5_4A32_D192_ED69));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

const PU_STREAM: u64 = 1;
const SPY_STREAM: u64 = 2;
const INNER_STREAM: u64 = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct FoldResult {
    pub fold: usize,
    /// Band width PUFC used on this fold.
    pub epsilon: Option<f64>,
    pub metrics: MetricsResult,
    pub flags: Vec<String>,
    pub pu_manifest: String,
}

impl FoldResult {
    pub fn failed(&self) -> bool {
        self.flags.iter().any(|f| f.starts_with("failed"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub dataset: String,
    pub method: Method,
    pub classifier: ClassifierKind,
    pub labeled_fraction: f64,
    pub epsilon: String,
    pub folds: Vec<FoldResult>,
    pub per_fold_f: Vec<f64>,
    pub mean_pct: f64,
    /// Sample standard deviation (n − 1) of the fold F-measures, in percent.
    pub std_pct: f64,
    pub fold_manifest: String,
}

impl Summary {
    fn new(d: &Dataset, cfg: &ExperimentConfig, plan: &FoldPlan, folds: Vec<FoldResult>) -> Self {
        let per_fold_f: Vec<f64> = folds.iter().map(|f| f.metrics.f_measure).collect();
        let (mean, std) = mean_std(&per_fold_f);
        Summary {
            dataset: d.name.clone(),
            method: cfg.method,
            classifier: cfg.classifier,
            labeled_fraction: cfg.labeled_fraction,
            epsilon: if cfg.method == Method::Pufc { cfg.epsilon.label() } else { String::new() },
            folds,
            per_fold_f,
            mean_pct: 100.0 * mean,
            std_pct: 100.0 * std,
            fold_manifest: plan.to_manifest(),
        }
    }

    pub fn failed_folds(&self) -> usize {
        self.folds.iter().filter(|f| f.failed()).count()
    }

    pub fn cell(&self) -> String {
        format!("{:.4}±{:.4}", self.mean_pct, self.std_pct)
    }
}

pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

struct Fitted {
    classifier: TrainedClassifier,
    epsilon: Option<f64>,
    flags: Vec<String>,
}

fn fit_method(
    x: &Array2<f64>,
    d: &Dataset,
    train: &[usize],
    pu: &PuView,
    cfg: &ExperimentConfig,
    fold_seed: u64,
) -> Result<Fitted> {
    let mut flags = Vec::new();
    match cfg.method {
        Method::Pufc => {
            let epsilon = match &cfg.epsilon {
                EpsilonChoice::Fixed(e) => *e,
                EpsilonChoice::Tuned { grid, inner_folds } => {
                    tune_epsilon(x, d, train, grid, *inner_folds, cfg, derive_seed(fold_seed, 0, INNER_STREAM))?
                }
            };
            let model = pufc::run_pufc(
                x,
                pu,
                &pufc::PufcConfig { band: EpsilonBand::new(epsilon)?, smuc: cfg.smuc, classifier: cfg.classifier },
            )?;
            if model.smuc.iterations >= cfg.smuc.max_iter {
                flags.push("smuc-max-iter".to_string());
            }
            Ok(Fitted { classifier: model.classifier, epsilon: Some(epsilon), flags })
        }
        Method::Spy => {
            let spy = SpyConfig {
                spy_ratio: cfg.spy_ratio,
                noise_level: cfg.noise_level,
                scorer: ClassifierKind::GaussianNb,
                final_classifier: cfg.classifier,
                seed: derive_seed(fold_seed, 0, SPY_STREAM),
            };
            let r = baselines::spy_pu(x, pu, &spy)?;
            if r.degenerate {
                flags.push("degenerate-spy-threshold".to_string());
            }
            Ok(Fitted { classifier: r.classifier, epsilon: None, flags })
        }
        Method::Basic => {
            let r = baselines::basic_pu(x, pu, cfg.classifier, cfg.pu_max_iter)?;
            if r.degenerate {
                flags.push("degenerate-empty-rn".to_string());
            }
            Ok(Fitted { classifier: r.classifier, epsilon: None, flags })
        }
        Method::Pruning => {
            let r = baselines::pruning_pu(x, pu, cfg.classifier, cfg.pu_max_iter)?;
            Ok(Fitted { classifier: r.classifier, epsilon: None, flags })
        }
    }
}

/// Picks the band width with the best mean F-measure over an inner stratified
/// split of the training indices. Test data of the outer fold is never seen.
/// Ties go to the earlier grid value.
fn tune_epsilon(
    x: &Array2<f64>,
    d: &Dataset,
    train: &[usize],
    grid: &[f64],
    inner_folds: usize,
    cfg: &ExperimentConfig,
    seed: u64,
) -> Result<f64> {
    let inner = Dataset::new(
        d.name.clone(),
        x.select(ndarray::Axis(0), train),
        train.iter().map(|&i| d.labels[i]).collect(),
        d.feature_names.clone(),
    )?;
    let plan = dataset::stratified_k_fold(&inner, inner_folds, seed)?;
    let mut totals = vec![0.0; grid.len()];
    for fold in 0..inner_folds {
        let inner_train = plan.train_indices(fold);
        let inner_test = &plan.test_sets[fold];
        let pu = dataset::make_pu_view(&inner, &inner_train, cfg.labeled_fraction, derive_seed(seed, fold, PU_STREAM))?;
        let Ok(clustering) = pufc::cluster(&inner.features, &pu, &cfg.smuc) else {
            continue;
        };
        let truth: Vec<Label> = inner_test.iter().map(|&i| inner.labels[i]).collect();
        for (g, &eps) in grid.iter().enumerate() {
            let Ok(model) = clustering.finish(EpsilonBand::new(eps)?, cfg.classifier) else {
                continue;
            };
            let pred = model.classifier.predict_rows(&inner.rows(inner_test))?;
            totals[g] += confusion(&truth, &pred)?.f_measure;
        }
    }
    let best = totals
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (g, &t)| if t > best.1 { (g, t) } else { best })
        .0;
    Ok(grid[best])
}

fn run_fold(d: &Dataset, plan: &FoldPlan, fold: usize, cfg: &ExperimentConfig) -> Result<FoldResult> {
    let train = plan.train_indices(fold);
    let test = &plan.test_sets[fold];
    let x =
        if cfg.standardize { Standardizer::fit(&d.features, &train)?.apply(&d.features) } else { d.features.clone() };
    let fold_seed = derive_seed(cfg.seed, fold, 0);
    let pu = dataset::make_pu_view(d, &train, cfg.labeled_fraction, derive_seed(cfg.seed, fold, PU_STREAM))?;
    let truth: Vec<Label> = test.iter().map(|&i| d.labels[i]).collect();

    let (pred, epsilon, flags) = match fit_method(&x, d, &train, &pu, cfg, fold_seed) {
        Ok(fitted) => {
            let rows = x.select(ndarray::Axis(0), test);
            (fitted.classifier.predict_rows(&rows)?, fitted.epsilon, fitted.flags)
        }
        // a failed method abstains: every test instance is called negative, so F = 0
        Err(e) => (vec![Label::Negative; test.len()], None, vec![format!("failed: {e}")]),
    };
    Ok(FoldResult { fold, epsilon, metrics: confusion(&truth, &pred)?, flags, pu_manifest: pu.to_manifest() })
}

/// Runs the k-fold protocol for one configuration. Folds may run in parallel;
/// results are collected in fold order.
pub fn run_cv_experiment(d: &Dataset, cfg: &ExperimentConfig) -> Result<Summary> {
    cfg.validate()?;
    let plan = dataset::stratified_k_fold(d, cfg.folds, cfg.seed)?;
    let folds: Vec<FoldResult> = if cfg.parallel {
        (0..cfg.folds).into_par_iter().map(|f| run_fold(d, &plan, f, cfg)).collect::<Result<_>>()?
    } else {
        (0..cfg.folds).map(|f| run_fold(d, &plan, f, cfg)).collect::<Result<_>>()?
    };
    Ok(Summary::new(d, cfg, &plan, folds))
}

/// One experiment per value of a swept parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub parameter: &'static str,
    pub values: Vec<f64>,
    pub summaries: Vec<Summary>,
}

impl Sweep {
    /// Index of the highest mean F-measure (earliest on ties).
    pub fn best(&self) -> usize {
        best_index(&self.summaries)
    }
}

fn best_index(summaries: &[Summary]) -> usize {
    summaries
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, s)| if s.mean_pct > best.1 { (i, s.mean_pct) } else { best })
        .0
}

pub fn epsilon_sweep(d: &Dataset, grid: &[f64], cfg: &ExperimentConfig) -> Result<Sweep> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("epsilon grid is empty".into()));
    }
    for &e in grid {
        EpsilonBand::new(e)?;
    }
    let summaries = grid
        .iter()
        .map(|&e| run_cv_experiment(d, &ExperimentConfig { epsilon: EpsilonChoice::Fixed(e), ..cfg.clone() }))
        .collect::<Result<_>>()?;
    Ok(Sweep { parameter: "epsilon", values: grid.to_vec(), summaries })
}

pub fn fraction_sweep(d: &Dataset, fractions: &[f64], cfg: &ExperimentConfig) -> Result<Sweep> {
    if fractions.is_empty() {
        return Err(Error::InvalidArgument("fraction list is empty".into()));
    }
    let summaries = fractions
        .iter()
        .map(|&f| run_cv_experiment(d, &ExperimentConfig { labeled_fraction: f, ..cfg.clone() }))
        .collect::<Result<_>>()?;
    Ok(Sweep { parameter: "labeled_fraction", values: fractions.to_vec(), summaries })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub summaries: Vec<Summary>,
}

impl Comparison {
    pub fn best(&self) -> usize {
        best_index(&self.summaries)
    }
}

/// Runs each method under the same folds, PU masks and final classifier.
pub fn compare_methods(d: &Dataset, methods: &[Method], cfg: &ExperimentConfig) -> Result<Comparison> {
    if methods.is_empty() {
        return Err(Error::InvalidArgument("no methods to compare".into()));
    }
    let summaries = methods
        .iter()
        .map(|&m| run_cv_experiment(d, &ExperimentConfig { method: m, ..cfg.clone() }))
        .collect::<Result<_>>()?;
    Ok(Comparison { summaries })
}

pub const FOLD_CSV_HEADER: &str =
    "dataset,method,classifier,labeled_fraction,epsilon,fold,precision,recall,f_measure,flags";
pub const SUMMARY_CSV_HEADER: &str = "dataset,method,classifier,labeled_fraction,epsilon,mean_pct,std_pct";

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Per-fold rows (without header).
pub fn fold_rows(s: &Summary) -> String {
    let mut out = String::new();
    for f in &s.folds {
        let eps = f.epsilon.map(|e| e.to_string()).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            csv_field(&s.dataset),
            s.method,
            s.classifier,
            s.labeled_fraction,
            eps,
            f.fold,
            f.metrics.precision,
            f.metrics.recall,
            f.metrics.f_measure,
            csv_field(&f.flags.join(";"))
        );
    }
    out
}

/// One summary row (without header).
pub fn summary_row(s: &Summary) -> String {
    format!(
        "{},{},{},{},{},{},{}\n",
        csv_field(&s.dataset),
        s.method,
        s.classifier,
        s.labeled_fraction,
        s.epsilon,
        s.mean_pct,
        s.std_pct
    )
}

fn aligned_table(row_label: &str, header: &[String], cells: &[String], best: usize) -> String {
    let marked: Vec<String> =
        cells.iter().enumerate().map(|(i, c)| if i == best { format!("{c} *") } else { c.clone() }).collect();
    let widths: Vec<usize> =
        header.iter().zip(&marked).map(|(h, c)| h.chars().count().max(c.chars().count())).collect();
    let first = row_label.chars().count().max(4);
    let mut out = String::new();
    let _ = write!(out, "{:<first$}", "data");
    for (h, w) in header.iter().zip(&widths) {
        let _ = write!(out, "  {h:>w$}");
    }
    out.push('\n');
    let _ = write!(out, "{row_label:<first$}");
    for (c, w) in marked.iter().zip(&widths) {
        let _ = write!(out, "  {c:>w$}");
    }
    out.push('\n');
    out
}

impl Sweep {
    /// Aligned one-row table, one column per swept value, `*` marking the best mean.
    pub fn text_table(&self) -> String {
        let header: Vec<String> = self.values.iter().map(|v| v.to_string()).collect();
        let cells: Vec<String> = self.summaries.iter().map(Summary::cell).collect();
        let dataset = self.summaries.first().map(|s| s.dataset.as_str()).unwrap_or("");
        aligned_table(dataset, &header, &cells, self.best())
    }
}

impl Comparison {
    /// Aligned one-row table, one column per method, `*` marking the best mean.
    pub fn text_table(&self) -> String {
        let header: Vec<String> = self.summaries.iter().map(|s| s.method.to_string()).collect();
        let cells: Vec<String> = self.summaries.iter().map(Summary::cell).collect();
        let dataset = self.summaries.first().map(|s| s.dataset.as_str()).unwrap_or("");
        aligned_table(dataset, &header, &cells, self.best())
    }
}
