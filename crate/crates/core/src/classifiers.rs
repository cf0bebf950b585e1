//! Binary classifiers used as the final classifier of the PU pipelines and as
//! the probabilistic scorer of the spy baseline.
//!
//! Every classifier reduces to a signed score whose sign decides the label
//! (`score >= 0` is +1), and `predict_proba` is a monotone map of that score
//! with `proba >= 0.5` exactly when `score >= 0`. Ties therefore go to +1.

use std::str::FromStr;

use ndarray::{Array1, Array2, ArrayView1, Axis};

use crate::{Error, Label, Result};

pub const KNN_K: usize = 3;
pub const NB_VAR_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ClassifierKind {
    NearestCentroid,
    Knn,
    GaussianNb,
}

impl ClassifierKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ClassifierKind::NearestCentroid => "nearest-centroid",
            ClassifierKind::Knn => "knn",
            ClassifierKind::GaussianNb => "gaussian-nb",
        }
    }
}

impl FromStr for ClassifierKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nearest-centroid" => Ok(ClassifierKind::NearestCentroid),
            "knn" => Ok(ClassifierKind::Knn),
            "gaussian-nb" => Ok(ClassifierKind::GaussianNb),
            _ => Err(Error::Unknown { kind: "classifier", name: s.to_string() }),
        }
    }
}

impl std::fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassStats {
    pub mean: Array1<f64>,
    pub var: Array1<f64>,
    pub log_prior: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TrainedClassifier {
    NearestCentroid { positive: Array1<f64>, negative: Array1<f64> },
    Knn { k: usize, x: Array2<f64>, positive: Vec<bool> },
    GaussianNb { positive: ClassStats, negative: ClassStats },
}

/// Fits a classifier of the given kind to rows of `x` labeled by `y`.
pub fn train(kind: ClassifierKind, x: &Array2<f64>, y: &[Label]) -> Result<TrainedClassifier> {
    if y.len() != x.nrows() {
        return Err(Error::DimensionMismatch { expected: x.nrows(), actual: y.len() });
    }
    let pos: Vec<usize> = (0..y.len()).filter(|&i| y[i].is_positive()).collect();
    let neg: Vec<usize> = (0..y.len()).filter(|&i| !y[i].is_positive()).collect();
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::SingleClass);
    }
    let mean_of = |idx: &[usize]| x.select(Axis(0), idx).mean_axis(Axis(0)).expect("non-empty class");
    Ok(match kind {
        ClassifierKind::NearestCentroid => {
            TrainedClassifier::NearestCentroid { positive: mean_of(&pos), negative: mean_of(&neg) }
        }
        ClassifierKind::Knn => TrainedClassifier::Knn {
            k: KNN_K.min(x.nrows()),
            x: x.clone(),
            positive: y.iter().map(|l| l.is_positive()).collect(),
        },
        ClassifierKind::GaussianNb => {
            let n = y.len() as f64;
            let stats = |idx: &[usize]| {
                let rows = x.select(Axis(0), idx);
                let mean = rows.mean_axis(Axis(0)).expect("non-empty class");
                let var =
                    rows.axis_iter(Axis(0)).fold(Array1::zeros(x.ncols()), |acc, r| acc + (&r - &mean).mapv(|v| v * v))
                        / idx.len() as f64;
                ClassStats { mean, var: var.mapv(|v: f64| v.max(NB_VAR_FLOOR)), log_prior: (idx.len() as f64 / n).ln() }
            };
            TrainedClassifier::GaussianNb { positive: stats(&pos), negative: stats(&neg) }
        }
    })
}

fn sq_dist(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(u, v)| (u - v) * (u - v)).sum()
}

fn log_likelihood(s: &ClassStats, x: ArrayView1<f64>) -> f64 {
    let mut ll = s.log_prior;
    for ((&xi, &m), &v) in x.iter().zip(s.mean.iter()).zip(s.var.iter()) {
        ll -= 0.5 * ((2.0 * std::f64::consts::PI * v).ln() + (xi - m) * (xi - m) / v);
    }
    ll
}

/// Largest double strictly below one half.
const BELOW_HALF: f64 = 0.5 - f64::EPSILON / 4.0;

/// Logistic map that keeps `proba >= 0.5` iff `score >= 0` even where the
/// logistic itself rounds to one half.
fn score_to_proba(score: f64) -> f64 {
    if score >= 0.0 {
        1.0 / (1.0 + (-score).exp())
    } else {
        let e = score.exp();
        (e / (1.0 + e)).min(BELOW_HALF)
    }
}

impl TrainedClassifier {
    pub fn kind(&self) -> ClassifierKind {
        match self {
            TrainedClassifier::NearestCentroid { .. } => ClassifierKind::NearestCentroid,
            TrainedClassifier::Knn { .. } => ClassifierKind::Knn,
            TrainedClassifier::GaussianNb { .. } => ClassifierKind::GaussianNb,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            TrainedClassifier::NearestCentroid { positive, .. } => positive.len(),
            TrainedClassifier::Knn { x, .. } => x.ncols(),
            TrainedClassifier::GaussianNb { positive, .. } => positive.mean.len(),
        }
    }

    fn check_dim(&self, x: ArrayView1<f64>) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), actual: x.len() });
        }
        Ok(())
    }

    /// Positive fraction among the k nearest training rows, ties on distance
    /// broken by lower training index.
    fn knn_vote(k: usize, train: &Array2<f64>, positive: &[bool], x: ArrayView1<f64>) -> f64 {
        let mut order: Vec<(f64, usize)> =
            train.axis_iter(Axis(0)).enumerate().map(|(i, r)| (sq_dist(r, x), i)).collect();
        order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let votes = order[..k].iter().filter(|(_, i)| positive[*i]).count();
        votes as f64 / k as f64
    }

    pub fn predict_proba(&self, x: ArrayView1<f64>) -> Result<f64> {
        self.check_dim(x)?;
        Ok(match self {
            TrainedClassifier::NearestCentroid { positive, negative } => {
                score_to_proba(sq_dist(negative.view(), x) - sq_dist(positive.view(), x))
            }
            TrainedClassifier::Knn { k, x: train, positive } => Self::knn_vote(*k, train, positive, x),
            TrainedClassifier::GaussianNb { positive, negative } => {
                score_to_proba(log_likelihood(positive, x) - log_likelihood(negative, x))
            }
        })
    }

    pub fn predict(&self, x: ArrayView1<f64>) -> Result<Label> {
        let p = self.predict_proba(x)?;
        Ok(if p >= 0.5 { Label::Positive } else { Label::Negative })
    }

    pub fn predict_rows(&self, x: &Array2<f64>) -> Result<Vec<Label>> {
        x.axis_iter(Axis(0)).map(|r| self.predict(r)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;
    use proptest::prelude::*;

    const P: Label = Label::Positive;
    const N: Label = Label::Negative;

    #[test]
    fn kinds_parse() {
        for k in [ClassifierKind::NearestCentroid, ClassifierKind::Knn, ClassifierKind::GaussianNb] {
            assert_eq!(k.as_str().parse::<ClassifierKind>().unwrap(), k);
        }
        assert!("svm".parse::<ClassifierKind>().is_err());
    }

    #[test]
    fn nearest_centroid_basics() {
        let x = array![[0.0, 0.0], [4.0, 4.0]];
        let c = train(ClassifierKind::NearestCentroid, &x, &[P, N]).unwrap();
        match &c {
            TrainedClassifier::NearestCentroid { positive, negative } => {
                assert_eq!(positive, &array![0.0, 0.0]);
                assert_eq!(negative, &array![4.0, 4.0]);
            }
            _ => unreachable!(),
        }
        assert_eq!(c.predict(array![0.0, 0.0].view()).unwrap(), P);
        assert_eq!(c.predict(array![4.0, 4.0].view()).unwrap(), N);
        assert_eq!(c.predict(array![2.0, 2.0].view()).unwrap(), P);
        assert_eq!(c.predict_proba(array![2.0, 2.0].view()).unwrap(), 0.5);
        assert!(c.predict_proba(array![0.0, 0.0].view()).unwrap() > 0.5);
        assert!(c.predict(array![1.0].view()).is_err());
    }

    #[test]
    fn single_class_rejected() {
        let x = array![[0.0], [1.0]];
        for k in [ClassifierKind::NearestCentroid, ClassifierKind::Knn, ClassifierKind::GaussianNb] {
            assert!(matches!(train(k, &x, &[P, P]), Err(Error::SingleClass)));
        }
    }

    #[test]
    fn gaussian_nb_priors_and_mean() {
        let x = array![[-1.0], [1.0], [3.0], [5.0]];
        let c = train(ClassifierKind::GaussianNb, &x, &[P, P, N, N]).unwrap();
        match &c {
            TrainedClassifier::GaussianNb { positive, negative } => {
                assert_abs_diff_eq!(positive.log_prior.exp(), 0.5, epsilon = 1e-15);
                assert_abs_diff_eq!(negative.log_prior.exp(), 0.5, epsilon = 1e-15);
                assert_eq!(positive.var, negative.var);
            }
            _ => unreachable!(),
        }
        // at the positive mean with equal variances and priors the positive
        // likelihood dominates by (0 - 4)^2 / (2 * 1)
        assert_eq!(c.predict(array![0.0].view()).unwrap(), P);
        let expected = 1.0 / (1.0 + (-8.0f64).exp());
        assert_abs_diff_eq!(c.predict_proba(array![0.0].view()).unwrap(), expected, epsilon = 1e-12);
        assert_abs_diff_eq!(c.predict_proba(array![2.0].view()).unwrap(), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn gaussian_nb_variance_floor() {
        let x = array![[1.0], [1.0], [3.0], [3.0]];
        let c = train(ClassifierKind::GaussianNb, &x, &[P, P, N, N]).unwrap();
        if let TrainedClassifier::GaussianNb { positive, .. } = &c {
            assert_eq!(positive.var[0], NB_VAR_FLOOR);
        }
        assert_eq!(c.predict(array![1.0].view()).unwrap(), P);
    }

    #[test]
    fn knn_votes_and_clamp() {
        let x = array![[0.0], [1.0], [2.0], [10.0]];
        let c = train(ClassifierKind::Knn, &x, &[P, P, N, N]).unwrap();
        assert_abs_diff_eq!(c.predict_proba(array![0.9].view()).unwrap(), 2.0 / 3.0, epsilon = 1e-15);
        let tiny = train(ClassifierKind::Knn, &array![[0.0], [1.0]], &[P, N]).unwrap();
        if let TrainedClassifier::Knn { k, .. } = &tiny {
            assert_eq!(*k, 2);
        }
        // one vote each: tie goes to +1
        assert_eq!(tiny.predict(array![0.5].view()).unwrap(), P);
    }

    #[test]
    fn knn_distance_ties_use_lowest_index() {
        let x = array![[1.0], [-1.0], [1.0], [-1.0], [5.0]];
        let c = train(ClassifierKind::Knn, &x, &[N, N, P, P, P]).unwrap();
        // all four neighbours at distance 1: indices 0, 1, 2 win
        assert_abs_diff_eq!(c.predict_proba(array![0.0].view()).unwrap(), 1.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn score_to_proba_threshold() {
        assert_eq!(score_to_proba(0.0), 0.5);
        assert!(score_to_proba(-1e-300) < 0.5);
        assert!(score_to_proba(1e-300) >= 0.5);
        assert!(score_to_proba(-1e9) >= 0.0 && score_to_proba(1e9) <= 1.0);
    }

    proptest! {
        #[test]
        fn prop_predict_matches_proba(
            pts in proptest::collection::vec(-5.0f64..5.0, 12),
            q in proptest::collection::vec(-6.0f64..6.0, 2),
        ) {
            let x = Array2::from_shape_vec((6, 2), pts).unwrap();
            let y = [P, N, P, N, P, N];
            let q = Array1::from(q);
            for kind in [ClassifierKind::NearestCentroid, ClassifierKind::Knn, ClassifierKind::GaussianNb] {
                let c = train(kind, &x, &y).unwrap();
                let p = c.predict_proba(q.view()).unwrap();
                prop_assert!((0.0..=1.0).contains(&p));
                prop_assert_eq!(c.predict(q.view()).unwrap() == P, p >= 0.5);
            }
        }

        #[test]
        fn prop_nearest_centroid_translation_invariant(
            pts in proptest::collection::vec(-5.0f64..5.0, 8),
            q in proptest::collection::vec(-6.0f64..6.0, 2),
            shift in proptest::collection::vec(-3.0f64..3.0, 2),
        ) {
            let x = Array2::from_shape_vec((4, 2), pts).unwrap();
            let y = [P, N, P, N];
            let (q, shift) = (Array1::from(q), Array1::from(shift));
            let c = train(ClassifierKind::NearestCentroid, &x, &y).unwrap();
            let shifted = train(ClassifierKind::NearestCentroid, &(&x + &shift), &y).unwrap();
            let (a, b) = (
                c.predict_proba(q.view()).unwrap(),
                shifted.predict_proba((&q + &shift).view()).unwrap(),
            );
            // exact decisions may flip only at numerically tied points
            if (a - 0.5).abs() > 1e-9 {
                prop_assert_eq!(a >= 0.5, b >= 0.5);
            }
        }
    }
}
