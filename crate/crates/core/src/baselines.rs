//! Baseline PU learners: iterative Basic, Spy and Pruning.
//!
//! Index lists in [`PuRunResult`] are positions into the PU view's unlabeled
//! list, so they line up with `PuView::unlabeled_truth`.

use std::collections::BTreeSet;

use ndarray::{Array2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::classifiers::{self, ClassifierKind, TrainedClassifier};
use crate::dataset::{round_half_up, PuView};
use crate::{Error, Label, Result};

pub const DEFAULT_MAX_ITER: usize = 50;
pub const DEFAULT_SPY_RATIO: f64 = 0.10;
pub const DEFAULT_NOISE_LEVEL: f64 = 0.15;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpyConfig {
    pub spy_ratio: f64,
    pub noise_level: f64,
    /// Probabilistic classifier that scores spies and unlabeled instances.
    pub scorer: ClassifierKind,
    /// Classifier trained on `P` against the extracted RN.
    pub final_classifier: ClassifierKind,
    pub seed: u64,
}

impl Default for SpyConfig {
    fn default() -> Self {
        SpyConfig {
            spy_ratio: DEFAULT_SPY_RATIO,
            noise_level: DEFAULT_NOISE_LEVEL,
            scorer: ClassifierKind::GaussianNb,
            final_classifier: ClassifierKind::NearestCentroid,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PuRunResult {
    pub rn_history: Vec<Vec<usize>>,
    pub classifier: TrainedClassifier,
    /// Final label of every unlabeled instance.
    pub labeled_d: Vec<Label>,
    pub iterations: usize,
    /// Set when the first round produced no negatives (Basic) or all spies
    /// scored identically (Spy).
    pub degenerate: bool,
}

impl PuRunResult {
    pub fn final_rn(&self) -> &[usize] {
        self.rn_history.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

struct PuRows {
    p: Array2<f64>,
    u: Array2<f64>,
}

fn gather(x: &Array2<f64>, pu: &PuView, min_p: usize) -> Result<PuRows> {
    if pu.positive.len() < min_p {
        return Err(Error::InvalidArgument(format!("need at least {min_p} labeled positives")));
    }
    if pu.unlabeled.len() < 2 {
        return Err(Error::InvalidArgument("need at least two unlabeled instances".into()));
    }
    if let Some(&bad) = pu.positive.iter().chain(&pu.unlabeled).find(|&&i| i >= x.nrows()) {
        return Err(Error::IndexOutOfRange { index: bad, len: x.nrows() });
    }
    Ok(PuRows { p: x.select(Axis(0), &pu.positive), u: x.select(Axis(0), &pu.unlabeled) })
}

/// Trains on `P` (+1) stacked over the listed `U` rows (−1).
fn train_p_vs(kind: ClassifierKind, rows: &PuRows, negatives: &[usize]) -> Result<TrainedClassifier> {
    let neg = rows.u.select(Axis(0), negatives);
    let x = ndarray::concatenate(Axis(0), &[rows.p.view(), neg.view()])
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let y: Vec<Label> = std::iter::repeat_n(Label::Positive, rows.p.nrows())
        .chain(std::iter::repeat_n(Label::Negative, negatives.len()))
        .collect();
    classifiers::train(kind, &x, &y)
}

fn predicted_negatives(c: &TrainedClassifier, u: &Array2<f64>, among: &[usize]) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for &j in among {
        if c.predict(u.row(j))? == Label::Negative {
            out.push(j);
        }
    }
    Ok(out)
}

/// Iteratively grows the reliable negative set: the first classifier treats
/// all of `U` as negative, every later one is trained on `P` against the
/// current RN and moves newly predicted negatives out of the remaining `U`.
pub fn basic_pu(x: &Array2<f64>, pu: &PuView, kind: ClassifierKind, max_iter: usize) -> Result<PuRunResult> {
    let rows = gather(x, pu, 1)?;
    let max_iter = max_iter.max(1);
    let all_u: Vec<usize> = (0..rows.u.nrows()).collect();

    let mut classifier = train_p_vs(kind, &rows, &all_u)?;
    let mut q = predicted_negatives(&classifier, &rows.u, &all_u)?;
    let mut rn: BTreeSet<usize> = q.iter().copied().collect();
    let mut remaining: Vec<usize> = all_u.iter().copied().filter(|j| !rn.contains(j)).collect();
    let mut history = vec![rn.iter().copied().collect::<Vec<_>>()];
    let degenerate = q.is_empty();

    let mut iterations = 1;
    while !q.is_empty() && iterations < max_iter {
        iterations += 1;
        let current: Vec<usize> = rn.iter().copied().collect();
        classifier = train_p_vs(kind, &rows, &current)?;
        q = predicted_negatives(&classifier, &rows.u, &remaining)?;
        rn.extend(q.iter().copied());
        remaining.retain(|j| !rn.contains(j));
        history.push(rn.iter().copied().collect());
    }

    let labeled_d = classifier.predict_rows(&rows.u)?;
    Ok(PuRunResult { rn_history: history, classifier, labeled_d, iterations, degenerate })
}

/// Spy-calibrated reliable negatives. A seeded fraction of `P` is hidden in
/// `U`; a probabilistic classifier is trained on the remaining positives
/// against `U ∪ spies`, and every `U` instance scoring below the
/// `noise_level`-quantile of the spy scores becomes a reliable negative.
pub fn spy_pu(x: &Array2<f64>, pu: &PuView, cfg: &SpyConfig) -> Result<PuRunResult> {
    let SpyConfig { spy_ratio, noise_level, scorer: kind, final_classifier: final_kind, seed } = *cfg;
    if !(spy_ratio > 0.0 && spy_ratio < 1.0) {
        return Err(Error::InvalidArgument(format!("spy ratio must be in (0, 1), got {spy_ratio}")));
    }
    if !(0.0..1.0).contains(&noise_level) {
        return Err(Error::InvalidArgument(format!("noise level must be in [0, 1), got {noise_level}")));
    }
    let rows = gather(x, pu, 2)?;
    let n_p = rows.p.nrows();
    let n_spies = spy_count(spy_ratio, n_p);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut is_spy = vec![false; n_p];
    for j in rand::seq::index::sample(&mut rng, n_p, n_spies) {
        is_spy[j] = true;
    }
    let kept: Vec<usize> = (0..n_p).filter(|&j| !is_spy[j]).collect();
    let spies: Vec<usize> = (0..n_p).filter(|&j| is_spy[j]).collect();

    let pos = rows.p.select(Axis(0), &kept);
    let spy_rows = rows.p.select(Axis(0), &spies);
    let train_x = ndarray::concatenate(Axis(0), &[pos.view(), rows.u.view(), spy_rows.view()])
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let train_y: Vec<Label> = std::iter::repeat_n(Label::Positive, kept.len())
        .chain(std::iter::repeat_n(Label::Negative, rows.u.nrows() + spies.len()))
        .collect();
    let scorer = classifiers::train(kind, &train_x, &train_y)?;

    let mut spy_scores = spy_rows.axis_iter(Axis(0)).map(|r| scorer.predict_proba(r)).collect::<Result<Vec<_>>>()?;
    spy_scores.sort_by(f64::total_cmp);
    let threshold = spy_threshold(&spy_scores, noise_level);
    let degenerate = spy_scores.len() > 1 && spy_scores.first() == spy_scores.last();

    let mut rn = Vec::new();
    for (j, r) in rows.u.axis_iter(Axis(0)).enumerate() {
        if scorer.predict_proba(r)? < threshold {
            rn.push(j);
        }
    }
    if rn.is_empty() {
        return Err(Error::EmptySpyNegatives { threshold });
    }

    let classifier = train_p_vs(final_kind, &rows, &rn)?;
    let labeled_d = classifier.predict_rows(&rows.u)?;
    Ok(PuRunResult { rn_history: vec![rn], classifier, labeled_d, iterations: 1, degenerate })
}

/// `round(ratio · |P|)`, at least one and leaving at least one positive behind.
pub fn spy_count(spy_ratio: f64, n_p: usize) -> usize {
    round_half_up(spy_ratio * n_p as f64).max(1).min(n_p.saturating_sub(1))
}

/// Score at rank `⌊noise_level · |S|⌋` of the ascending spy scores, so that at
/// most that many spies fall strictly below it.
pub fn spy_threshold(sorted_scores: &[f64], noise_level: f64) -> f64 {
    let rank = ((noise_level * sorted_scores.len() as f64).floor() as usize).min(sorted_scores.len() - 1);
    sorted_scores[rank]
}

/// Starts from `RN = U` and repeatedly drops the RN instances that a
/// classifier trained on `P` against RN predicts positive.
pub fn pruning_pu(x: &Array2<f64>, pu: &PuView, kind: ClassifierKind, max_iter: usize) -> Result<PuRunResult> {
    let rows = gather(x, pu, 1)?;
    let mut rn: Vec<usize> = (0..rows.u.nrows()).collect();
    let mut history = vec![rn.clone()];
    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        let c = train_p_vs(kind, &rows, &rn)?;
        let kept = predicted_negatives(&c, &rows.u, &rn)?;
        if kept.is_empty() {
            return Err(Error::PrunedToEmpty { iteration: iterations });
        }
        let changed = kept.len() != rn.len();
        rn = kept;
        history.push(rn.clone());
        if !changed {
            break;
        }
    }
    let classifier = train_p_vs(kind, &rows, &rn)?;
    let labeled_d = classifier.predict_rows(&rows.u)?;
    Ok(PuRunResult { rn_history: history, classifier, labeled_d, iterations, degenerate: false })
}
