//! Fuzzy-clustering PU learner.
//!
//! SMUC is run over `P ∪ U` with every labeled positive pinned to cluster 0.
//! The positive-cluster membership `u⁺` of each unlabeled instance then
//! splits `U` three ways around 0.5:
//!
//! - `u⁺ <= 0.5 − ε` → reliable negative (RN)
//! - `0.5 − ε < u⁺ < 0.5 + ε` → noise, discarded from training
//! - `u⁺ >= 0.5 + ε` → reliable positive (RP), merged into `P`
//!
//! The rules are applied in that order, so with `ε = 0` an exact 0.5 is RN.
//! A final classifier is trained on `P ∪ RP` against `RN`; it labels the noise
//! instances and is the model evaluated on held-out data.

use ndarray::{Array2, Axis};

use crate::classifiers::{self, ClassifierKind, TrainedClassifier};
use crate::dataset::PuView;
use crate::smuc::{self, SmucConfig, SmucModel};
use crate::{Error, Label, Result};

/// Cluster index that holds the labeled positives.
pub const POSITIVE_CLUSTER: usize = 0;

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct EpsilonBand(f64);

impl EpsilonBand {
    pub fn new(epsilon: f64) -> Result<Self> {
        if !(0.0..0.5).contains(&epsilon) {
            return Err(Error::InvalidArgument(format!("epsilon must be in [0, 0.5), got {epsilon}")));
        }
        Ok(EpsilonBand(epsilon))
    }

    pub fn epsilon(self) -> f64 {
        self.0
    }

    pub fn lower(self) -> f64 {
        0.5 - self.0
    }

    pub fn upper(self) -> f64 {
        0.5 + self.0
    }
}

/// Partition of the unlabeled set. Index lists are positions into `u_plus`
/// (equivalently, into the unlabeled list of the PU view).
#[derive(Debug, Clone, PartialEq)]
pub struct ReliableSplit {
    pub rn: Vec<usize>,
    pub rp: Vec<usize>,
    pub noise: Vec<usize>,
    pub u_plus: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct PufcConfig {
    pub band: EpsilonBand,
    pub smuc: SmucConfig,
    pub classifier: ClassifierKind,
}

impl Default for PufcConfig {
    fn default() -> Self {
        PufcConfig { band: EpsilonBand(0.1), smuc: SmucConfig::default(), classifier: ClassifierKind::NearestCentroid }
    }
}

#[derive(Debug, Clone)]
pub struct PufcModel {
    pub split: ReliableSplit,
    pub classifier: TrainedClassifier,
    pub expanded_p_size: usize,
    pub smuc: SmucModel,
    pub epsilon: f64,
    /// The labeled training set: `P` and `RP` as +1, `RN` as −1, and noise
    /// instances labeled by the final classifier. Ordered as `P` then `U`.
    pub labeled: Vec<(usize, Label)>,
}

/// Purity of a selected subset against hidden truth, `None` when empty.
pub fn purity(selected: &[usize], truth: &[Label], expected: Label) -> Option<f64> {
    if selected.is_empty() {
        return None;
    }
    let hits = selected.iter().filter(|&&j| truth[j] == expected).count();
    Some(hits as f64 / selected.len() as f64)
}

impl PufcModel {
    /// Plain-text summary; purities are included when `truth` (aligned with `U`) is given.
    pub fn report(&self, truth: Option<&[Label]>) -> String {
        let s = &self.split;
        let mut out = format!(
            "epsilon: {}\nrn: {}\nrp: {}\nnoise: {}\nexpanded_p: {}\nsmuc_iterations: {}\n",
            self.epsilon,
            s.rn.len(),
            s.rp.len(),
            s.noise.len(),
            self.expanded_p_size,
            self.smuc.iterations
        );
        if let Some(truth) = truth {
            let fmt = |p: Option<f64>| p.map_or_else(|| "n/a".to_string(), |v| v.to_string());
            out.push_str(&format!("rn_purity: {}\n", fmt(purity(&s.rn, truth, Label::Negative))));
            out.push_str(&format!("rp_purity: {}\n", fmt(purity(&s.rp, truth, Label::Positive))));
        }
        out
    }
}

/// Positive-cluster membership of the listed rows of the membership matrix.
pub fn positive_membership(model: &SmucModel, u_indices: &[usize], positive_cluster: usize) -> Result<Vec<f64>> {
    let u = model.memberships.values();
    if positive_cluster >= u.ncols() {
        return Err(Error::IndexOutOfRange { index: positive_cluster, len: u.ncols() });
    }
    u_indices
        .iter()
        .map(|&i| {
            if i >= u.nrows() {
                Err(Error::IndexOutOfRange { index: i, len: u.nrows() })
            } else {
                Ok(u[[i, positive_cluster]])
            }
        })
        .collect()
}

/// Normalised binary fuzziness `−u log₂ u − (1 − u) log₂ (1 − u)`, with `0 log 0 = 0`.
pub fn fuzziness(u: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&u) {
        return Err(Error::InvalidArgument(format!("membership must lie in [0, 1], got {u}")));
    }
    let h = |p: f64| if p > 0.0 { -p * p.log2() } else { 0.0 };
    Ok(h(u) + h(1.0 - u))
}

pub fn split_unlabeled(u_plus: &[f64], band: EpsilonBand) -> ReliableSplit {
    let (lower, upper) = (band.lower(), band.upper());
    let mut split = ReliableSplit { rn: Vec::new(), rp: Vec::new(), noise: Vec::new(), u_plus: u_plus.to_vec() };
    for (j, &u) in u_plus.iter().enumerate() {
        if u <= lower {
            split.rn.push(j);
        } else if u < upper {
            split.noise.push(j);
        } else {
            split.rp.push(j);
        }
    }
    split
}

/// SMUC fitted over `P ∪ U`, ready to be split at any band width.
#[derive(Debug, Clone)]
pub struct PufcClustering {
    rows: Array2<f64>,
    n_p: usize,
    positive: Vec<usize>,
    unlabeled: Vec<usize>,
    pub smuc: SmucModel,
    pub u_plus: Vec<f64>,
}

/// Steps up to the membership extraction: clusters `P ∪ U` with every labeled
/// positive pinned to [`POSITIVE_CLUSTER`] and reads off `u⁺` for `U`.
pub fn cluster(x: &Array2<f64>, pu: &PuView, config: &SmucConfig) -> Result<PufcClustering> {
    let (n_p, n_u) = (pu.positive.len(), pu.unlabeled.len());
    if n_p < 1 {
        return Err(Error::InvalidArgument("PUFC needs at least one labeled positive".into()));
    }
    if n_u < 2 {
        return Err(Error::InvalidArgument("PUFC needs at least two unlabeled instances".into()));
    }
    let order: Vec<usize> = pu.positive.iter().chain(&pu.unlabeled).copied().collect();
    if let Some(&bad) = order.iter().find(|&&i| i >= x.nrows()) {
        return Err(Error::IndexOutOfRange { index: bad, len: x.nrows() });
    }
    let rows = x.select(Axis(0), &order);

    let assignments: Vec<(usize, usize)> = (0..n_p).map(|i| (i, POSITIVE_CLUSTER)).collect();
    let prior = smuc::seed_prior(order.len(), 2, &assignments)?;
    let smuc_model = smuc::fit(&rows, &prior, config)?;

    let u_rows: Vec<usize> = (n_p..order.len()).collect();
    let u_plus = positive_membership(&smuc_model, &u_rows, POSITIVE_CLUSTER)?;
    Ok(PufcClustering {
        rows,
        n_p,
        positive: pu.positive.clone(),
        unlabeled: pu.unlabeled.clone(),
        smuc: smuc_model,
        u_plus,
    })
}

impl PufcClustering {
    /// Splits `U` by the band, trains the final classifier on `P ∪ RP`
    /// against `RN` and assembles the labeled set.
    pub fn finish(&self, band: EpsilonBand, kind: ClassifierKind) -> Result<PufcModel> {
        let n_p = self.n_p;
        let split = split_unlabeled(&self.u_plus, band);
        if split.rn.is_empty() {
            return Err(Error::EmptyReliableNegatives { epsilon: band.epsilon() });
        }

        let train_rows: Vec<usize> =
            (0..n_p).chain(split.rp.iter().map(|&j| n_p + j)).chain(split.rn.iter().map(|&j| n_p + j)).collect();
        let labels: Vec<Label> = std::iter::repeat_n(Label::Positive, n_p + split.rp.len())
            .chain(std::iter::repeat_n(Label::Negative, split.rn.len()))
            .collect();
        let classifier = classifiers::train(kind, &self.rows.select(Axis(0), &train_rows), &labels)?;

        let mut u_labels = vec![None; self.unlabeled.len()];
        for &j in &split.rn {
            u_labels[j] = Some(Label::Negative);
        }
        for &j in &split.rp {
            u_labels[j] = Some(Label::Positive);
        }
        let mut labeled: Vec<(usize, Label)> = self.positive.iter().map(|&i| (i, Label::Positive)).collect();
        for (j, &i) in self.unlabeled.iter().enumerate() {
            let label = match u_labels[j] {
                Some(l) => l,
                None => classifier.predict(self.rows.row(n_p + j))?,
            };
            labeled.push((i, label));
        }

        Ok(PufcModel {
            expanded_p_size: n_p + split.rp.len(),
            split,
            classifier,
            smuc: self.smuc.clone(),
            epsilon: band.epsilon(),
            labeled,
        })
    }
}

/// Runs the full pipeline on the rows of `x` named by the PU view.
pub fn run_pufc(x: &Array2<f64>, pu: &PuView, config: &PufcConfig) -> Result<PufcModel> {
    cluster(x, pu, &config.smuc)?.finish(config.band, config.classifier)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::dataset::{self, Dataset};
    use approx::assert_abs_diff_eq;
    use ndarray::array;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn band(e: f64) -> EpsilonBand {
        EpsilonBand::new(e).unwrap()
    }

    #[test]
    fn band_range() {
        assert!(EpsilonBand::new(0.0).is_ok());
        assert!(EpsilonBand::new(0.49).is_ok());
        assert!(EpsilonBand::new(0.5).is_err());
        assert!(EpsilonBand::new(-0.1).is_err());
    }

    #[test]
    fn fuzziness_values() {
        assert_eq!(fuzziness(0.5).unwrap(), 1.0);
        assert_eq!(fuzziness(0.0).unwrap(), 0.0);
        assert_eq!(fuzziness(1.0).unwrap(), 0.0);
        // -(0.25 log2 0.25 + 0.75 log2 0.75) = 0.5 + 0.75 (2 - log2 3)
        let expected = 0.5 + 0.75 * (2.0 - 3f64.log2());
        assert_abs_diff_eq!(fuzziness(0.25).unwrap(), expected, epsilon = 1e-15);
        assert_abs_diff_eq!(fuzziness(0.25).unwrap(), 0.811278, epsilon = 1e-6);
        assert!(fuzziness(1.1).is_err());
        assert!(fuzziness(-0.1).is_err());
    }

    #[test]
    fn split_threshold_rules() {
        let s = split_unlabeled(&[0.35, 0.55, 0.72], band(0.1));
        assert_eq!((s.rn, s.noise, s.rp), (vec![0], vec![1], vec![2]));
        let s = split_unlabeled(&[0.5], band(0.0));
        assert_eq!(s.rn, vec![0]);
        let u: Vec<f64> = (1..19).map(|i| 0.05 + 0.05 * i as f64 * 0.99).collect();
        let s = split_unlabeled(&u, band(0.45));
        assert_eq!(s.noise.len(), u.len());
    }

    #[test]
    fn positive_membership_projection() {
        let x = array![[0.0], [0.1], [3.0], [3.2]];
        let prior = smuc::seed_prior(4, 2, &[(0, 0)]).unwrap();
        let m = smuc::fit(&x, &prior, &SmucConfig::default()).unwrap();
        let all = positive_membership(&m, &[0, 1, 2, 3], 0).unwrap();
        assert_eq!(all[0], 1.0);
        let other = positive_membership(&m, &[1, 2, 3], 1).unwrap();
        for (a, b) in all[1..].iter().zip(&other) {
            assert_abs_diff_eq!(a + b, 1.0, epsilon = 1e-12);
        }
        assert!(positive_membership(&m, &[4], 0).is_err());
        assert!(positive_membership(&m, &[0], 2).is_err());
    }

    pub(crate) fn two_gaussians(seed: u64, per_class: usize) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = ndarray::Array2::from_shape_fn((2 * per_class, 2), |(i, _)| {
            let m = if i < per_class { 2.0 } else { -2.0 };
            m + rng.sample::<f64, _>(rand_distr::StandardNormal)
        });
        let labels =
            (0..2 * per_class).map(|i| if i < per_class { Label::Positive } else { Label::Negative }).collect();
        Dataset::new("gauss", x, labels, vec!["a".into(), "b".into()]).unwrap()
    }

    #[test]
    fn recovers_separated_gaussians() {
        for seed in 0..5 {
            let d = two_gaussians(seed, 100);
            let train: Vec<usize> = (0..200).collect();
            let pu = dataset::make_pu_view(&d, &train, 0.3, seed).unwrap();
            let cfg = PufcConfig { band: band(0.2), ..PufcConfig::default() };
            let m = run_pufc(&d.features, &pu, &cfg).unwrap();
            let rn = purity(&m.split.rn, &pu.unlabeled_truth, Label::Negative).unwrap();
            let rp = purity(&m.split.rp, &pu.unlabeled_truth, Label::Positive).unwrap();
            assert!(rn >= 0.9 && rp >= 0.9, "seed {seed}: rn {rn} rp {rp}");
            assert_eq!(m.expanded_p_size, pu.positive.len() + m.split.rp.len());

            let wide = run_pufc(&d.features, &pu, &PufcConfig { band: band(0.49), ..cfg.clone() }).unwrap();
            assert!(wide.split.noise.len() >= m.split.noise.len());
            assert!(wide.split.rn.len() <= m.split.rn.len());
            if let Some(p) = purity(&wide.split.rn, &pu.unlabeled_truth, Label::Negative) {
                assert!(p >= 0.9);
            }
        }
    }

    #[test]
    fn labeled_set_is_consistent() {
        let d = two_gaussians(11, 60);
        let train: Vec<usize> = (0..120).collect();
        let pu = dataset::make_pu_view(&d, &train, 0.3, 2).unwrap();
        let m = run_pufc(&d.features, &pu, &PufcConfig::default()).unwrap();
        assert_eq!(m.labeled.len(), train.len());
        let label_of: std::collections::HashMap<usize, Label> = m.labeled.iter().copied().collect();
        assert!(pu.positive.iter().all(|i| label_of[i] == Label::Positive));
        assert!(m.split.rn.iter().all(|&j| label_of[&pu.unlabeled[j]] == Label::Negative));
        assert!(m.split.rp.iter().all(|&j| label_of[&pu.unlabeled[j]] == Label::Positive));
        let again = run_pufc(&d.features, &pu, &PufcConfig::default()).unwrap();
        assert_eq!(again.labeled, m.labeled);
        assert_eq!(again.split, m.split);
        assert!(m.report(Some(&pu.unlabeled_truth)).contains("rn_purity"));
    }

    #[test]
    fn unlabeled_copies_of_positives_yield_no_negatives() {
        // U duplicates P exactly, so both seeded centroids coincide and every
        // unlabeled membership sits at 0.5: the whole of U falls in the noise band.
        let x = array![[0.0, 1.0], [1.0, 0.0], [2.0, 2.0], [0.0, 1.0], [1.0, 0.0], [2.0, 2.0]];
        let pu = dataset::PuView {
            positive: vec![0, 1, 2],
            unlabeled: vec![3, 4, 5],
            unlabeled_truth: vec![Label::Positive; 3],
            labeled_fraction: 0.5,
        };
        let cfg = PufcConfig { band: band(0.1), ..PufcConfig::default() };
        match run_pufc(&x, &pu, &cfg) {
            Err(Error::EmptyReliableNegatives { epsilon }) => assert_eq!(epsilon, 0.1),
            other => panic!("expected empty RN, got {other:?}"),
        }
    }

    #[test]
    fn rejects_tiny_inputs() {
        let x = array![[0.0], [1.0], [2.0]];
        let pu = dataset::PuView {
            positive: vec![],
            unlabeled: vec![0, 1, 2],
            unlabeled_truth: vec![Label::Positive; 3],
            labeled_fraction: 0.1,
        };
        assert!(run_pufc(&x, &pu, &PufcConfig::default()).is_err());
        let pu = dataset::PuView { positive: vec![0, 1], unlabeled: vec![2], ..pu };
        assert!(run_pufc(&x, &pu, &PufcConfig::default()).is_err());
    }

    proptest! {
        #[test]
        fn prop_split_partition_and_monotone(
            u in proptest::collection::vec(0.0f64..=1.0, 0..60),
            e1 in 0.0f64..0.5, e2 in 0.0f64..0.5,
        ) {
            let (lo, hi) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
            let a = split_unlabeled(&u, band(lo));
            let b = split_unlabeled(&u, band(hi));
            let mut all: Vec<usize> = a.rn.iter().chain(&a.rp).chain(&a.noise).copied().collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..u.len()).collect::<Vec<_>>());
            prop_assert!(a.noise.iter().all(|j| b.noise.contains(j)));
            prop_assert!(b.rn.iter().all(|j| a.rn.contains(j)));
            prop_assert!(b.rp.iter().all(|j| a.rp.contains(j)));
            // noise is strictly fuzzier than anything outside the band
            let fz = |j: &usize| fuzziness(u[*j]).unwrap();
            let min_noise = a.noise.iter().map(fz).fold(f64::INFINITY, f64::min);
            let max_clear = a.rn.iter().chain(&a.rp).map(fz).fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(a.noise.is_empty() || a.rn.len() + a.rp.len() == 0 || min_noise >= max_clear);
        }
    }
}
