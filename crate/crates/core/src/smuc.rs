//! Semi-supervised metric-based fuzzy clustering (SMUC).
//!
//! Prior memberships `u'` carry the side information: a labeled instance has a
//! one-hot prior row, an unlabeled instance an all-zero row. From the priors a
//! prior-weighted covariance `C` is estimated and its inverse `A = C⁻¹` fixed as
//! the Mahalanobis metric. The clustering then minimises
//!
//! ```text
//! J(U, V) = Σ_k Σ_i u_ik · d²_A(x_i, v_k)  +  η⁻¹ Σ_k Σ_i (u_ik − u'_ik) · ln(u_ik − u'_ik)
//! ```
//!
//! subject to `Σ_k u_ik = 1`, by alternating the closed-form membership update
//!
//! ```text
//! u_ik = u'_ik + softmax_k(−η · d²_A(x_i, v_k)) · (1 − Σ_j u'_ij)
//! ```
//!
//! with the weighted-mean centroid update `v_k = Σ_i u_ik x_i / Σ_i u_ik`.
//! Both steps are exact block minimisers, so `J` never increases.

use std::fmt::Write as _;

use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::{Array1, Array2, ArrayView1, Axis};

use crate::{Error, Result};

const SYMMETRY_TOL: f64 = 1e-10;
const MAX_CONDITION: f64 = 1e12;
const RIDGE_FLOOR: f64 = 1e-8;

/// Prior membership matrix `u'` (n × c): entries in [0, 1], rows summing to at most 1.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorMembership(Array2<f64>);

impl PriorMembership {
    pub fn new(values: Array2<f64>) -> Result<Self> {
        if values.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::InvalidArgument("prior memberships must lie in [0, 1]".into()));
        }
        if let Some(i) = values.axis_iter(Axis(0)).position(|r| r.sum() > 1.0 + 1e-12) {
            return Err(Error::InvalidArgument(format!("prior row {i} sums above 1")));
        }
        Ok(PriorMembership(values))
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.0
    }

    pub fn n_instances(&self) -> usize {
        self.0.nrows()
    }

    pub fn n_clusters(&self) -> usize {
        self.0.ncols()
    }

    pub fn row_sums(&self) -> Array1<f64> {
        self.0.sum_axis(Axis(1))
    }

    /// Weights used only for the preliminary centroids and covariance: rows
    /// without any prior mass are spread uniformly over the clusters, so every
    /// cluster has support even when no instance was labeled into it.
    pub fn seeding_weights(&self) -> Array2<f64> {
        let c = self.n_clusters() as f64;
        let mut w = self.0.clone();
        for mut row in w.axis_iter_mut(Axis(0)) {
            if row.sum() == 0.0 {
                row.fill(1.0 / c);
            }
        }
        w
    }
}

/// One-hot priors for the listed `(instance, cluster)` pairs, zero elsewhere.
pub fn seed_prior(n: usize, c: usize, assignments: &[(usize, usize)]) -> Result<PriorMembership> {
    let mut values = Array2::zeros((n, c));
    let mut seen = vec![false; n];
    for &(i, k) in assignments {
        if i >= n {
            return Err(Error::IndexOutOfRange { index: i, len: n });
        }
        if k >= c {
            return Err(Error::IndexOutOfRange { index: k, len: c });
        }
        if std::mem::replace(&mut seen[i], true) {
            return Err(Error::DuplicateAssignment(i));
        }
        values[[i, k]] = 1.0;
    }
    Ok(PriorMembership(values))
}

/// Membership matrix `u` (n × c) with rows on the probability simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct MembershipMatrix(Array2<f64>);

impl MembershipMatrix {
    pub fn values(&self) -> &Array2<f64> {
        &self.0
    }

    pub fn argmax(&self) -> Vec<usize> {
        self.0
            .axis_iter(Axis(0))
            .map(|r| {
                r.iter()
                    .enumerate()
                    .fold((0, f64::NEG_INFINITY), |best, (k, &v)| if v > best.1 { (k, v) } else { best })
                    .0
            })
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let header: Vec<String> = (0..self.0.ncols()).map(|k| format!("u{k}")).collect();
        out.push_str(&header.join(","));
        out.push('\n');
        for row in self.0.axis_iter(Axis(0)) {
            let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

/// Cluster prototypes (c × d).
#[derive(Debug, Clone, PartialEq)]
pub struct Centroids(Array2<f64>);

impl Centroids {
    pub fn new(values: Array2<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("centroids must be finite".into()));
        }
        Ok(Centroids(values))
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.0
    }
}

/// Mahalanobis metric `A = (C + λI)⁻¹`; `ridge_used` is `λ`.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricMatrix {
    a: Array2<f64>,
    ridge_used: f64,
}

impl MetricMatrix {
    pub fn identity(d: usize) -> Self {
        MetricMatrix { a: Array2::eye(d), ridge_used: 0.0 }
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.a
    }

    pub fn ridge_used(&self) -> f64 {
        self.ridge_used
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    fn quad_form(&self, x: ArrayView1<f64>, y: ArrayView1<f64>) -> f64 {
        let diff = &x - &y;
        diff.dot(&self.a.dot(&diff)).max(0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmucConfig {
    /// Inverse temperature of the entropy regulariser.
    pub eta: f64,
    /// Convergence threshold on the Frobenius norm of successive membership matrices.
    pub tol: f64,
    pub max_iter: usize,
    /// Relative ridge applied to an ill-conditioned covariance.
    pub ridge: f64,
}

impl Default for SmucConfig {
    fn default() -> Self {
        SmucConfig { eta: 1.0, tol: 1e-5, max_iter: 300, ridge: 1e-8 }
    }
}

impl SmucConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0) || !self.eta.is_finite() {
            return Err(Error::InvalidArgument(format!("eta must be positive, got {}", self.eta)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidArgument(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidArgument("max_iter must be positive".into()));
        }
        if !(self.ridge >= 0.0) {
            return Err(Error::InvalidArgument(format!("ridge must be non-negative, got {}", self.ridge)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SmucModel {
    pub centroids: Centroids,
    pub metric: MetricMatrix,
    pub memberships: MembershipMatrix,
    pub iterations: usize,
    /// Objective after each membership/centroid update pair.
    pub objective_trace: Vec<f64>,
}

impl SmucModel {
    pub fn report(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "iterations: {}", self.iterations);
        let _ = writeln!(out, "ridge_used: {}", self.metric.ridge_used);
        let trace: Vec<String> = self.objective_trace.iter().map(|v| v.to_string()).collect();
        let _ = writeln!(out, "objective_trace: {}", trace.join(" "));
        let _ = writeln!(out, "centroids:");
        for (k, row) in self.centroids.0.axis_iter(Axis(0)).enumerate() {
            let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            let _ = writeln!(out, "  {k}: {}", cells.join(" "));
        }
        out
    }
}

fn check_rows(x: &Array2<f64>, n: usize) -> Result<()> {
    if x.nrows() != n {
        return Err(Error::DimensionMismatch { expected: n, actual: x.nrows() });
    }
    Ok(())
}

/// Weighted means with squared weights: `v'_k = Σ_i w_ik² x_i / Σ_i w_ik²`.
pub fn preliminary_centroids(x: &Array2<f64>, weights: &Array2<f64>) -> Result<Centroids> {
    check_rows(x, weights.nrows())?;
    let w2 = weights.mapv(|w| w * w);
    let mass = w2.sum_axis(Axis(0));
    if let Some(k) = mass.iter().position(|&m| !(m > 0.0)) {
        return Err(Error::EmptyCluster(k));
    }
    let sums = w2.t().dot(x);
    Ok(Centroids(sums / &mass.insert_axis(Axis(1))))
}

/// Prior-weighted scatter: `C = (1/n) Σ_k Σ_i w_ik² (x_i − v'_k)(x_i − v'_k)ᵀ`.
pub fn prior_covariance(x: &Array2<f64>, weights: &Array2<f64>, centroids: &Centroids) -> Result<Array2<f64>> {
    check_rows(x, weights.nrows())?;
    let (n, d) = x.dim();
    if centroids.0.dim() != (weights.ncols(), d) {
        return Err(Error::DimensionMismatch { expected: weights.ncols() * d, actual: centroids.0.len() });
    }
    let mut cov = Array2::<f64>::zeros((d, d));
    for (k, v) in centroids.0.axis_iter(Axis(0)).enumerate() {
        let w2 = weights.column(k).mapv(|w| w * w);
        let dev = x - &v;
        let weighted = &dev * &w2.insert_axis(Axis(1));
        cov += &weighted.t().dot(&dev);
    }
    cov /= n as f64;
    // exact symmetry; the two triangles can differ in the last bit
    let sym = (&cov + &cov.t()) * 0.5;
    Ok(sym)
}

/// Inverts a covariance matrix into a Mahalanobis metric. A ridge
/// `λ = ridge · trace(C) / d` (at least `1e-8` when the trace vanishes) is added
/// when `C` is not positive definite or its condition number exceeds `1e12`.
pub fn metric_from_covariance(c: &Array2<f64>, ridge: f64) -> Result<MetricMatrix> {
    let (d, d2) = c.dim();
    if d != d2 || d == 0 {
        return Err(Error::DimensionMismatch { expected: d, actual: d2 });
    }
    let asym = c.iter().zip(c.t().iter()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    if asym > SYMMETRY_TOL {
        return Err(Error::NotSymmetric(asym));
    }
    let m = DMatrix::from_fn(d, d, |i, j| c[[i, j]]);
    let eig = SymmetricEigen::new(m.clone()).eigenvalues;
    let (lo, hi) = eig.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &e| (lo.min(e), hi.max(e)));
    let well_conditioned = lo > 0.0 && hi / lo <= MAX_CONDITION;

    let lambda = if well_conditioned {
        0.0
    } else {
        let trace = m.trace();
        if trace > 0.0 {
            ridge * trace / d as f64
        } else {
            ridge.max(RIDGE_FLOOR)
        }
    };
    let regularised = &m + DMatrix::identity(d, d) * lambda;
    let inv = regularised.cholesky().ok_or(Error::NotPositiveDefinite { lambda })?.inverse();
    let a = Array2::from_shape_fn((d, d), |(i, j)| 0.5 * (inv[(i, j)] + inv[(j, i)]));
    Ok(MetricMatrix { a, ridge_used: lambda })
}

/// `(x − y)ᵀ A (x − y)`.
pub fn mahalanobis_sq(a: &MetricMatrix, x: ArrayView1<f64>, y: ArrayView1<f64>) -> Result<f64> {
    let d = a.dim();
    for len in [x.len(), y.len()] {
        if len != d {
            return Err(Error::DimensionMismatch { expected: d, actual: len });
        }
    }
    Ok(a.quad_form(x, y))
}

/// Squared Mahalanobis distances from every instance to every centroid (n × c).
fn distance_table(x: &Array2<f64>, v: &Centroids, a: &MetricMatrix) -> Array2<f64> {
    let mut table = Array2::zeros((x.nrows(), v.0.nrows()));
    for (i, xi) in x.axis_iter(Axis(0)).enumerate() {
        for (k, vk) in v.0.axis_iter(Axis(0)).enumerate() {
            table[[i, k]] = a.quad_form(xi, vk);
        }
    }
    table
}

fn check_shapes(x: &Array2<f64>, v: &Centroids, a: &MetricMatrix, prior: &PriorMembership) -> Result<()> {
    check_rows(x, prior.n_instances())?;
    if v.0.nrows() != prior.n_clusters() {
        return Err(Error::DimensionMismatch { expected: prior.n_clusters(), actual: v.0.nrows() });
    }
    for dim in [v.0.ncols(), a.dim()] {
        if dim != x.ncols() {
            return Err(Error::DimensionMismatch { expected: x.ncols(), actual: dim });
        }
    }
    Ok(())
}

/// Membership row for one instance from its squared distances and prior row.
pub(crate) fn membership_row(dist: ArrayView1<f64>, prior: ArrayView1<f64>, eta: f64) -> Array1<f64> {
    let free = (1.0 - prior.sum()).max(0.0);
    if free == 0.0 {
        return prior.to_owned();
    }
    let logits = dist.mapv(|d| -eta * d);
    let top = logits.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
    let weights = logits.mapv(|l| (l - top).exp());
    let total = weights.sum();
    let mut row = &prior + &(weights * (free / total));
    row.mapv_inplace(|u| u.min(1.0));
    row
}

pub fn update_memberships(
    x: &Array2<f64>,
    v: &Centroids,
    a: &MetricMatrix,
    prior: &PriorMembership,
    eta: f64,
) -> Result<MembershipMatrix> {
    if !(eta > 0.0) {
        return Err(Error::InvalidArgument(format!("eta must be positive, got {eta}")));
    }
    check_shapes(x, v, a, prior)?;
    Ok(memberships_from_distances(&distance_table(x, v, a), prior, eta))
}

fn memberships_from_distances(dist: &Array2<f64>, prior: &PriorMembership, eta: f64) -> MembershipMatrix {
    let mut u = Array2::zeros(dist.dim());
    for (i, mut row) in u.axis_iter_mut(Axis(0)).enumerate() {
        row.assign(&membership_row(dist.row(i), prior.0.row(i), eta));
    }
    MembershipMatrix(u)
}

/// Weighted means: `v_k = Σ_i u_ik x_i / Σ_i u_ik`.
pub fn update_centroids(x: &Array2<f64>, u: &MembershipMatrix) -> Result<Centroids> {
    check_rows(x, u.0.nrows())?;
    let mass = u.0.sum_axis(Axis(0));
    if let Some(k) = mass.iter().position(|&m| !(m > 0.0)) {
        return Err(Error::EmptyCluster(k));
    }
    Ok(Centroids(u.0.t().dot(x) / &mass.insert_axis(Axis(1))))
}

/// Entropy part of the objective for one entry, with `0 · ln 0 = 0`.
fn entropy_term(u: f64, prior: f64) -> f64 {
    let gap = u - prior;
    if gap > 0.0 {
        gap * gap.ln()
    } else {
        0.0
    }
}

pub fn objective(
    x: &Array2<f64>,
    u: &MembershipMatrix,
    prior: &PriorMembership,
    v: &Centroids,
    a: &MetricMatrix,
    eta: f64,
) -> Result<f64> {
    check_shapes(x, v, a, prior)?;
    if u.0.dim() != prior.0.dim() {
        return Err(Error::DimensionMismatch { expected: prior.0.len(), actual: u.0.len() });
    }
    objective_from_distances(&distance_table(x, v, a), u, prior, eta)
}

fn objective_from_distances(
    dist: &Array2<f64>,
    u: &MembershipMatrix,
    prior: &PriorMembership,
    eta: f64,
) -> Result<f64> {
    let mut dispersion = 0.0;
    let mut entropy = 0.0;
    for ((i, k), &uik) in u.0.indexed_iter() {
        let pik = prior.0[[i, k]];
        if uik < pik {
            return Err(Error::BelowPrior { row: i, cluster: k });
        }
        dispersion += uik * dist[[i, k]];
        entropy += entropy_term(uik, pik);
    }
    Ok(dispersion + entropy / eta)
}

/// Runs SMUC to convergence. See [`fit_observed`].
pub fn fit(x: &Array2<f64>, prior: &PriorMembership, config: &SmucConfig) -> Result<SmucModel> {
    fit_observed(x, prior, config, |_, _| {})
}

/// Runs SMUC, calling `observe(iteration, memberships)` after every membership update.
///
/// Preliminary centroids and the metric come from the seeding weights; the
/// metric is then held fixed while memberships and centroids alternate until
/// `‖U_t − U_{t−1}‖_F < tol` (with `U_0 = u'`) or `max_iter` pairs have run.
pub fn fit_observed<F>(
    x: &Array2<f64>,
    prior: &PriorMembership,
    config: &SmucConfig,
    mut observe: F,
) -> Result<SmucModel>
where
    F: FnMut(usize, &MembershipMatrix),
{
    config.validate()?;
    check_rows(x, prior.n_instances())?;
    let (n, c) = (prior.n_instances(), prior.n_clusters());
    if c < 2 || n < c {
        return Err(Error::InvalidArgument(format!("need n >= c >= 2, got n = {n}, c = {c}")));
    }

    let seeding = prior.seeding_weights();
    let mut centroids = preliminary_centroids(x, &seeding)?;
    let cov = prior_covariance(x, &seeding, &centroids)?;
    let metric = metric_from_covariance(&cov, config.ridge)?;

    let mut previous = MembershipMatrix(prior.0.clone());
    let mut trace = Vec::new();
    let mut iterations = 0;
    loop {
        let dist = distance_table(x, &centroids, &metric);
        let u = memberships_from_distances(&dist, prior, config.eta);
        iterations += 1;
        observe(iterations, &u);
        centroids = update_centroids(x, &u)?;
        let dist = distance_table(x, &centroids, &metric);
        trace.push(objective_from_distances(&dist, &u, prior, config.eta)?);

        let change = (&u.0 - &previous.0).mapv(|v| v * v).sum().sqrt();
        previous = u;
        if change < config.tol || iterations >= config.max_iter {
            break;
        }
    }

    Ok(SmucModel { centroids, metric, memberships: previous, iterations, objective_trace: trace })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::{array, Array1};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn prior(values: Array2<f64>) -> PriorMembership {
        PriorMembership::new(values).unwrap()
    }

    #[test]
    fn seed_prior_cases() {
        let p = seed_prior(3, 2, &[(0, 0)]).unwrap();
        assert_eq!(p.values(), &array![[1.0, 0.0], [0.0, 0.0], [0.0, 0.0]]);
        assert_eq!(seed_prior(2, 2, &[]).unwrap().values(), &Array2::<f64>::zeros((2, 2)));
        assert!(matches!(seed_prior(3, 2, &[(0, 0), (0, 1)]), Err(Error::DuplicateAssignment(0))));
        assert!(matches!(seed_prior(3, 2, &[(3, 0)]), Err(Error::IndexOutOfRange { .. })));
        assert!(matches!(seed_prior(3, 2, &[(0, 2)]), Err(Error::IndexOutOfRange { .. })));
    }

    #[test]
    fn prior_validation() {
        assert!(PriorMembership::new(array![[0.7, 0.6]]).is_err());
        assert!(PriorMembership::new(array![[-0.1, 0.0]]).is_err());
        assert!(PriorMembership::new(array![[0.4, 0.6]]).is_ok());
    }

    #[test]
    fn seeding_weights_spread_unlabeled_rows() {
        let p = seed_prior(3, 2, &[(0, 0)]).unwrap();
        assert_eq!(p.seeding_weights(), array![[1.0, 0.0], [0.5, 0.5], [0.5, 0.5]]);
    }

    #[test]
    fn preliminary_centroid_values() {
        let x = array![[0.0, 0.0], [2.0, 2.0]];
        let v = preliminary_centroids(&x, &array![[1.0], [1.0]]).unwrap();
        assert_eq!(v.values(), &array![[1.0, 1.0]]);
        let v = preliminary_centroids(&x, &array![[1.0], [0.0]]).unwrap();
        assert_eq!(v.values(), &array![[0.0, 0.0]]);
        // (0·1 + 3·0.25) / 1.25
        let v = preliminary_centroids(&array![[0.0], [3.0]], &array![[1.0], [0.5]]).unwrap();
        assert_abs_diff_eq!(v.values()[[0, 0]], 0.6, epsilon = 1e-15);
        assert!(matches!(preliminary_centroids(&x, &array![[1.0, 0.0], [1.0, 0.0]]), Err(Error::EmptyCluster(1))));
    }

    #[test]
    fn prior_covariance_values() {
        let x = array![[-1.0], [1.0]];
        let v = Centroids::new(array![[0.0]]).unwrap();
        let c = prior_covariance(&x, &array![[1.0], [1.0]], &v).unwrap();
        assert_abs_diff_eq!(c[[0, 0]], 1.0, epsilon = 1e-15);
        let zero = prior_covariance(&x, &array![[0.0], [0.0]], &v).unwrap();
        assert_eq!(zero[[0, 0]], 0.0);
        let at_centroid = prior_covariance(&array![[0.0], [0.0]], &array![[1.0], [1.0]], &v).unwrap();
        assert_eq!(at_centroid[[0, 0]], 0.0);
    }

    #[test]
    fn metric_inversion() {
        let m = metric_from_covariance(&Array2::eye(3), 0.0).unwrap();
        assert_eq!(m.values(), &Array2::<f64>::eye(3));
        assert_eq!(m.ridge_used(), 0.0);
        let m = metric_from_covariance(&array![[4.0, 0.0], [0.0, 1.0]], 1e-8).unwrap();
        assert_abs_diff_eq!(m.values()[[0, 0]], 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(m.values()[[1, 1]], 1.0, epsilon = 1e-15);
        assert_eq!(m.values()[[0, 1]], 0.0);
    }

    #[test]
    fn metric_degenerate_inputs() {
        // zero covariance falls back to the absolute ridge floor
        let m = metric_from_covariance(&Array2::zeros((2, 2)), 1e-8).unwrap();
        assert_eq!(m.ridge_used(), 1e-8);
        assert_abs_diff_eq!(m.values()[[0, 0]], 1e8, epsilon = 1e-6);
        // singular rank-1 covariance gets a trace-relative ridge
        let m = metric_from_covariance(&array![[1.0, 1.0], [1.0, 1.0]], 1e-8).unwrap();
        assert_abs_diff_eq!(m.ridge_used(), 1e-8, epsilon = 1e-20);
        assert!(matches!(metric_from_covariance(&array![[1.0, 0.5], [0.0, 1.0]], 1e-8), Err(Error::NotSymmetric(_))));
        assert!(matches!(
            metric_from_covariance(&array![[1.0, 2.0], [2.0, 1.0]], 0.0),
            Err(Error::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn mahalanobis_hand_values() {
        let a = metric_from_covariance(&array![[4.0, 0.0], [0.0, 1.0]], 0.0).unwrap();
        let d = mahalanobis_sq(&a, array![2.0, 0.0].view(), array![0.0, 0.0].view()).unwrap();
        assert_abs_diff_eq!(d, 1.0, epsilon = 1e-15);
        let x = array![0.3, -1.7];
        assert_eq!(mahalanobis_sq(&a, x.view(), x.view()).unwrap(), 0.0);
        let id = MetricMatrix::identity(2);
        let e = mahalanobis_sq(&id, array![1.0, 2.0].view(), array![4.0, 6.0].view()).unwrap();
        assert_abs_diff_eq!(e, 25.0, epsilon = 1e-12);
        assert!(mahalanobis_sq(&a, array![1.0].view(), array![1.0, 2.0].view()).is_err());
    }

    #[test]
    fn membership_update_hand_values() {
        // distances (0, ln 2) -> weights (1, 1/2) -> (2/3, 1/3)
        let row = membership_row(array![0.0, 2f64.ln()].view(), array![0.0, 0.0].view(), 1.0);
        assert_abs_diff_eq!(row[0], 2.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(row[1], 1.0 / 3.0, epsilon = 1e-12);

        let x = array![[0.0], [1.0], [5.0]];
        let v = Centroids::new(array![[0.0], [2.0]]).unwrap();
        let p = prior(array![[0.0, 1.0], [0.0, 0.0], [0.0, 0.0]]);
        let u = update_memberships(&x, &v, &MetricMatrix::identity(1), &p, 1.0).unwrap();
        // labeled row is a fixed point, equidistant row splits evenly
        assert_eq!(u.values().row(0), array![0.0, 1.0]);
        assert_eq!(u.values().row(1), array![0.5, 0.5]);
        assert!(update_memberships(&x, &v, &MetricMatrix::identity(1), &p, 0.0).is_err());
    }

    #[test]
    fn centroid_update_values() {
        let x = array![[0.0], [4.0]];
        let c = |u: Array2<f64>| update_centroids(&x, &MembershipMatrix(u)).unwrap().values()[[0, 0]];
        assert_eq!(c(array![[1.0], [1.0]]), 2.0);
        assert_eq!(c(array![[1.0], [0.0]]), 0.0);
        assert_eq!(c(array![[0.75], [0.25]]), 1.0);
        assert!(update_centroids(&x, &MembershipMatrix(array![[1.0, 0.0], [1.0, 0.0]])).is_err());
    }

    #[test]
    fn objective_values() {
        let x = array![[0.0], [3.0]];
        let v = Centroids::new(array![[0.0], [3.0]]).unwrap();
        let p = prior(array![[1.0, 0.0], [0.0, 1.0]]);
        let u = MembershipMatrix(p.values().clone());
        let j = objective(&x, &u, &p, &v, &MetricMatrix::identity(1), 1.0).unwrap();
        assert_eq!(j, 0.0);

        let x = array![[0.0]];
        let v = Centroids::new(array![[1.0], [-1.0]]).unwrap();
        let p = prior(array![[0.0, 0.0]]);
        let u = MembershipMatrix(array![[0.5, 0.5]]);
        let j = objective(&x, &u, &p, &v, &MetricMatrix::identity(1), 1.0).unwrap();
        assert_abs_diff_eq!(j, 1.0 - 2f64.ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(j, 0.30685, epsilon = 1e-5);

        let p = prior(array![[0.6, 0.0]]);
        assert!(matches!(
            objective(&x, &u, &p, &v, &MetricMatrix::identity(1), 1.0),
            Err(Error::BelowPrior { row: 0, cluster: 0 })
        ));
    }

    #[test]
    fn fit_fully_labeled_is_fixed_point() {
        let x = array![[0.0, 0.1], [0.2, -0.1], [-0.1, 0.0], [10.0, 10.1], [10.2, 9.9], [9.9, 10.0]];
        let p = seed_prior(6, 2, &[(0, 0), (1, 0), (2, 0), (3, 1), (4, 1), (5, 1)]).unwrap();
        let m = fit(&x, &p, &SmucConfig::default()).unwrap();
        assert!(m.iterations <= 3);
        assert_eq!(m.memberships.values(), p.values());
    }

    #[test]
    fn fit_infinite_tol_runs_one_pair() {
        let x = array![[0.0], [0.5], [4.0], [4.5]];
        let p = seed_prior(4, 2, &[(0, 0)]).unwrap();
        let cfg = SmucConfig { tol: f64::INFINITY, ..SmucConfig::default() };
        let m = fit(&x, &p, &cfg).unwrap();
        assert_eq!(m.iterations, 1);
        assert_eq!(m.objective_trace.len(), 1);
    }

    #[test]
    fn fit_rejects_bad_input() {
        let x = array![[0.0], [1.0]];
        let p = seed_prior(2, 1, &[]).unwrap();
        assert!(fit(&x, &p, &SmucConfig::default()).is_err());
        let p = seed_prior(2, 2, &[]).unwrap();
        assert!(fit(&x, &p, &SmucConfig { eta: 0.0, ..SmucConfig::default() }).is_err());
        assert!(fit(&array![[0.0]], &p, &SmucConfig::default()).is_err());
    }

    fn gaussian_mixture(seed: u64) -> (Array2<f64>, Vec<usize>, PriorMembership) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = rand_distr::StandardNormal;
        let x = Array2::from_shape_fn((200, 2), |(i, _)| {
            let mean = if i < 100 { 2.0 } else { -2.0 };
            mean + rng.sample::<f64, _>(normal)
        });
        let truth = (0..200).map(|i| usize::from(i >= 100)).collect();
        let labeled: Vec<(usize, usize)> =
            rand::seq::index::sample(&mut rng, 100, 10).into_iter().map(|i| (i, 0)).collect();
        (x, truth, seed_prior(200, 2, &labeled).unwrap())
    }

    #[test]
    fn fit_recovers_gaussian_mixture() {
        let mut floor = f64::INFINITY;
        for seed in 0..20 {
            let (x, truth, p) = gaussian_mixture(seed);
            let m = fit(&x, &p, &SmucConfig::default()).unwrap();
            let assigned = m.memberships.argmax();
            let acc = assigned.iter().zip(&truth).filter(|(a, t)| a == t).count() as f64 / 200.0;
            // Bayes rule for symmetric means ±2·1: sign of the coordinate sum
            let bayes = x.axis_iter(Axis(0)).zip(&truth).filter(|(r, &t)| usize::from(r.sum() < 0.0) == t).count()
                as f64
                / 200.0;
            assert!(acc >= bayes - 0.02, "seed {seed}: acc {acc} vs bayes {bayes}");
            floor = floor.min(acc);
        }
        assert!(floor >= 0.95, "achieved floor {floor}");
    }

    #[test]
    fn fit_is_deterministic() {
        let (x, _, p) = gaussian_mixture(4);
        let a = fit(&x, &p, &SmucConfig::default()).unwrap();
        let b = fit(&x, &p, &SmucConfig::default()).unwrap();
        assert_eq!(a.memberships, b.memberships);
        assert_eq!(a.objective_trace, b.objective_trace);
    }

    #[test]
    fn report_lists_fields() {
        let (x, _, p) = gaussian_mixture(1);
        let m = fit(&x, &p, &SmucConfig::default()).unwrap();
        let r = m.report();
        assert!(r.contains("iterations:") && r.contains("ridge_used:") && r.contains("centroids:"));
        assert_eq!(m.memberships.to_csv().lines().count(), 201);
    }

    proptest! {
        #[test]
        fn prop_membership_simplex(
            dists in proptest::collection::vec(0.0f64..50.0, 3),
            p0 in 0.0f64..1.0, frac in 0.0f64..1.0, eta in 0.1f64..5.0,
        ) {
            let p1 = (1.0 - p0) * frac;
            let prior_row = array![p0, p1, 0.0];
            let row = membership_row(Array1::from(dists).view(), prior_row.view(), eta);
            prop_assert!((row.sum() - 1.0).abs() < 1e-12);
            for k in 0..3 {
                prop_assert!(row[k] >= prior_row[k] && row[k] <= 1.0);
            }
        }

        #[test]
        fn prop_mahalanobis_symmetric(
            x in proptest::collection::vec(-10.0f64..10.0, 2),
            y in proptest::collection::vec(-10.0f64..10.0, 2),
            a in 0.5f64..3.0, b in 0.5f64..3.0, r in -0.9f64..0.9,
        ) {
            let off = r * (a * b).sqrt();
            let m = metric_from_covariance(&array![[a, off], [off, b]], 0.0).unwrap();
            let (x, y) = (Array1::from(x), Array1::from(y));
            let dxy = mahalanobis_sq(&m, x.view(), y.view()).unwrap();
            let dyx = mahalanobis_sq(&m, y.view(), x.view()).unwrap();
            prop_assert!((dxy - dyx).abs() <= 1e-12 * dxy.max(1.0));
            prop_assert!(dxy >= 0.0);
            if x != y {
                prop_assert!(dxy > 0.0);
            }
        }
    }
}
