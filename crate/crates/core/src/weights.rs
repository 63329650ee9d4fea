//! Local probability weights.
//!
//! A scheme maps a query point and the covariates X_1..X_n to nonnegative
//! weights summing to one. Responses never enter the computation.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::measures::{dist2, Points};
use crate::rng;
use crate::synth::SyntheticModel;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum KernelKind {
    /// K(x) = 1{‖x‖ ≤ 1}.
    Uniform,
    /// Trapezoid profile: M2 on ‖x‖ ≤ R1, linear down to M1 at R2, zero beyond.
    /// Satisfies M1·1{‖x‖ ≤ R1} ≤ K(x) ≤ M2·1{‖x‖ ≤ R2}.
    Boxed { m1: f64, m2: f64, r1: f64, r2: f64 },
}

impl KernelKind {
    pub fn validate(&self) -> Result<()> {
        if let KernelKind::Boxed { m1, m2, r1, r2 } = *self {
            if !(m1 > 0.0 && m2 >= m1 && m2.is_finite()) {
                return Err(invalid("boxed kernel needs m2 ≥ m1 > 0"));
            }
            if !(r1 > 0.0 && r2 >= r1 && r2.is_finite()) {
                return Err(invalid("boxed kernel needs r2 ≥ r1 > 0"));
            }
        }
        Ok(())
    }

    /// Kernel value at squared radius `r2` (in bandwidth units).
    fn eval_sq(&self, rsq: f64) -> f64 {
        match *self {
            KernelKind::Uniform => {
                if rsq <= 1.0 {
                    1.0
                } else {
                    0.0
                }
            }
            KernelKind::Boxed { m1, m2, r1, r2 } => {
                if rsq <= r1 * r1 {
                    m2
                } else if rsq <= r2 * r2 {
                    let r = rsq.sqrt();
                    if r2 > r1 {
                        m2 + (m1 - m2) * (r - r1) / (r2 - r1)
                    } else {
                        m2
                    }
                } else {
                    0.0
                }
            }
        }
    }

    /// Radius beyond which the kernel vanishes.
    fn reach(&self) -> f64 {
        match *self {
            KernelKind::Uniform => 1.0,
            KernelKind::Boxed { r2, .. } => r2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelScheme {
    pub bandwidth: f64,
    pub kernel: KernelKind,
}

impl KernelScheme {
    pub fn uniform(bandwidth: f64) -> Result<Self> {
        let s = Self { bandwidth, kernel: KernelKind::Uniform };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.bandwidth > 0.0 && self.bandwidth.is_finite()) {
            return Err(invalid(format!("bandwidth must be positive, got {}", self.bandwidth)));
        }
        self.kernel.validate()
    }

    fn value(&self, d2: f64) -> f64 {
        self.kernel.eval_sq(d2 / (self.bandwidth * self.bandwidth))
    }
}

/// κ nearest neighbors; ties go to the smaller sample index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct KnnScheme {
    pub kappa: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum WeightScheme {
    Kernel(KernelScheme),
    Knn(KnnScheme),
}

impl WeightScheme {
    /// Check the scheme against a sample of size `n`.
    pub fn validate_for(&self, n: usize) -> Result<()> {
        if n == 0 {
            return Err(Error::EmptySample);
        }
        match self {
            WeightScheme::Kernel(k) => k.validate(),
            WeightScheme::Knn(k) if k.kappa == 0 || k.kappa > n => {
                Err(invalid(format!("kappa = {} outside 1..={n}", k.kappa)))
            }
            WeightScheme::Knn(_) => Ok(()),
        }
    }

    pub fn weights(&self, covariates: &Points, x: &[f64]) -> Result<WeightVector> {
        match self {
            WeightScheme::Kernel(k) => kernel_weights(k, covariates, x),
            WeightScheme::Knn(k) => knn_weights(k, covariates, x),
        }
    }
}

/// Weights W_1(x)..W_n(x) with the query and scheme that produced them.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightVector {
    pub values: Vec<f64>,
    pub query: Vec<f64>,
    pub scheme: WeightScheme,
}

impl WeightVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sum_of_squares(&self) -> f64 {
        self.values.iter().map(|w| w * w).sum()
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// Indices with positive weight, increasing.
    pub fn support(&self) -> Vec<usize> {
        (0..self.values.len()).filter(|&i| self.values[i] > 0.0).collect()
    }
}

fn check_query(covariates: &Points, x: &[f64]) -> Result<()> {
    if covariates.is_empty() {
        return Err(Error::EmptySample);
    }
    if x.len() != covariates.dim() {
        return Err(Error::DimensionMismatch { expected: covariates.dim(), got: x.len() });
    }
    Ok(())
}

/// Normalized kernel weights; all weights are 1/n when no kernel mass falls
/// on the sample.
pub fn kernel_weights(scheme: &KernelScheme, covariates: &Points, x: &[f64]) -> Result<WeightVector> {
    scheme.validate()?;
    check_query(covariates, x)?;
    let raw: Vec<f64> = covariates.rows().map(|xi| scheme.value(dist2(x, xi))).collect();
    Ok(normalize_kernel(raw, x, *scheme))
}

fn normalize_kernel(mut raw: Vec<f64>, x: &[f64], scheme: KernelScheme) -> WeightVector {
    let total: f64 = raw.iter().sum();
    if total > 0.0 {
        raw.iter_mut().for_each(|v| *v /= total);
    } else {
        let n = raw.len() as f64;
        raw.iter_mut().for_each(|v| *v = 1.0 / n);
    }
    WeightVector { values: raw, query: x.to_vec(), scheme: WeightScheme::Kernel(scheme) }
}

/// Indices of the κ nearest covariates in increasing index order.
fn knn_indices(kappa: usize, covariates: &Points, x: &[f64]) -> Vec<usize> {
    let mut keyed: Vec<(f64, usize)> = covariates.rows().enumerate().map(|(i, xi)| (dist2(x, xi), i)).collect();
    let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    if kappa < keyed.len() {
        keyed.select_nth_unstable_by(kappa - 1, cmp);
        keyed.truncate(kappa);
    }
    let mut idx: Vec<usize> = keyed.into_iter().map(|(_, i)| i).collect();
    idx.sort_unstable();
    idx
}

fn knn_vector(idx: &[usize], n: usize, x: &[f64], scheme: KnnScheme) -> WeightVector {
    let mut values = vec![0.0; n];
    let w = 1.0 / scheme.kappa as f64;
    for &i in idx {
        values[i] = w;
    }
    WeightVector { values, query: x.to_vec(), scheme: WeightScheme::Knn(scheme) }
}

/// Weight 1/κ on each of the κ nearest covariates (Euclidean distance, ties
/// to the smaller index).
pub fn knn_weights(scheme: &KnnScheme, covariates: &Points, x: &[f64]) -> Result<WeightVector> {
    check_query(covariates, x)?;
    WeightScheme::Knn(*scheme).validate_for(covariates.len())?;
    let idx = knn_indices(scheme.kappa, covariates, x);
    Ok(knn_vector(&idx, covariates.len(), x, *scheme))
}

/// Sorted view of one-dimensional covariates. Produces the same weights as
/// the linear scans above, bit for bit, without a full distance scan.
#[derive(Debug, Clone)]
pub struct SortedIndex {
    values: Vec<f64>,
    order: Vec<usize>,
}

impl SortedIndex {
    pub fn new(covariates: &Points) -> Result<Self> {
        if covariates.dim() != 1 {
            return Err(Error::DimensionMismatch { expected: 1, got: covariates.dim() });
        }
        let c = covariates.coords();
        let mut order: Vec<usize> = (0..c.len()).collect();
        order.sort_by(|&a, &b| c[a].total_cmp(&c[b]).then(a.cmp(&b)));
        let values = order.iter().map(|&i| c[i]).collect();
        Ok(Self { values, order })
    }

    /// The squared distance to `x` is nonincreasing then nondecreasing along
    /// the sorted values; return the range where it is ≤ `limit` (or < when
    /// `strict`).
    fn range_within(&self, x: f64, limit: f64, strict: bool) -> (usize, usize) {
        let inside = |v: f64| {
            let d = (x - v) * (x - v);
            if strict {
                d < limit
            } else {
                d <= limit
            }
        };
        let mid = self.values.partition_point(|&v| v < x);
        let lo = self.values[..mid].partition_point(|&v| !inside(v));
        let hi = mid + self.values[mid..].partition_point(|&v| inside(v));
        (lo, hi)
    }

    pub fn kernel_weights(&self, scheme: &KernelScheme, x: &[f64]) -> Result<WeightVector> {
        scheme.validate()?;
        self.check(x)?;
        let q = x[0];
        let reach = scheme.kernel.reach() * scheme.bandwidth;
        // widen the candidate range slightly; exact membership is decided by the kernel itself
        let (lo, hi) = self.range_within(q, reach * reach * (1.0 + 1e-9) + f64::MIN_POSITIVE, false);
        let mut raw = vec![0.0; self.values.len()];
        for pos in lo..hi {
            let xi = self.values[pos];
            raw[self.order[pos]] = scheme.value((q - xi) * (q - xi));
        }
        Ok(normalize_kernel(raw, x, *scheme))
    }

    pub fn knn_weights(&self, scheme: &KnnScheme, x: &[f64]) -> Result<WeightVector> {
        self.check(x)?;
        let n = self.values.len();
        WeightScheme::Knn(*scheme).validate_for(n)?;
        let q = x[0];
        let d = |pos: usize| (q - self.values[pos]) * (q - self.values[pos]);
        // merge the two monotone distance sequences to find the κ-th smallest distance
        let mid = self.values.partition_point(|&v| v < q);
        let (mut l, mut r) = (mid, mid);
        let mut kth = 0.0;
        for _ in 0..scheme.kappa {
            let left = if l > 0 { d(l - 1) } else { f64::INFINITY };
            let right = if r < n { d(r) } else { f64::INFINITY };
            if left <= right {
                kth = left;
                l -= 1;
            } else {
                kth = right;
                r += 1;
            }
        }
        let (slo, shi) = self.range_within(q, kth, true);
        let (wlo, whi) = self.range_within(q, kth, false);
        let mut idx: Vec<usize> = self.order[slo..shi].to_vec();
        let mut ties: Vec<usize> = self.order[wlo..slo].iter().chain(&self.order[shi..whi]).copied().collect();
        ties.sort_unstable();
        idx.extend(ties.into_iter().take(scheme.kappa - idx.len()));
        idx.sort_unstable();
        Ok(knn_vector(&idx, n, x, *scheme))
    }

    pub fn weights(&self, scheme: &WeightScheme, x: &[f64]) -> Result<WeightVector> {
        match scheme {
            WeightScheme::Kernel(k) => self.kernel_weights(k, x),
            WeightScheme::Knn(k) => self.knn_weights(k, x),
        }
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::EmptySample);
        }
        if x.len() != 1 {
            return Err(Error::DimensionMismatch { expected: 1, got: x.len() });
        }
        Ok(())
    }
}

/// A positive sequence s(n) = scale · n^exponent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Schedule {
    pub scale: f64,
    pub exponent: f64,
}

impl Schedule {
    pub fn power(scale: f64, exponent: f64) -> Self {
        Self { scale, exponent }
    }

    pub fn constant(value: f64) -> Self {
        Self { scale: value, exponent: 0.0 }
    }

    pub fn value(&self, n: usize) -> f64 {
        self.scale * (n as f64).powf(self.exponent)
    }

    /// ⌈s(n)⌉ clamped to 1..=n; values within 1e-12 (relative) above an
    /// integer round down to it.
    pub fn count(&self, n: usize) -> usize {
        let v = self.value(n) * (1.0 - 1e-12);
        (v.ceil().max(1.0) as usize).min(n)
    }
}

/// A weight scheme whose tuning parameter follows a schedule in n.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum SchemeRule {
    Kernel { kernel: KernelKind, bandwidth: Schedule },
    Knn { neighbors: Schedule },
}

impl SchemeRule {
    pub fn at(&self, n: usize) -> Result<WeightScheme> {
        let s = match *self {
            SchemeRule::Kernel { kernel, bandwidth } => {
                WeightScheme::Kernel(KernelScheme { bandwidth: bandwidth.value(n), kernel })
            }
            SchemeRule::Knn { neighbors } => WeightScheme::Knn(KnnScheme { kappa: neighbors.count(n) }),
        };
        s.validate_for(n)?;
        Ok(s)
    }

    /// Bandwidth h(n) or neighbor count κ(n) as a real number.
    pub fn parameter(&self, n: usize) -> f64 {
        match *self {
            SchemeRule::Kernel { bandwidth, .. } => bandwidth.value(n),
            SchemeRule::Knn { neighbors } => neighbors.count(n) as f64,
        }
    }

    pub fn is_knn(&self) -> bool {
        matches!(self, SchemeRule::Knn { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StoneRow {
    pub n: usize,
    /// Estimate of E[max_i W_i(X)].
    pub max_weight: f64,
    pub max_weight_se: f64,
    /// Estimate of E[Σ W_i(X)·1{‖X_i − X‖ > eps}].
    pub far_mass: f64,
    pub far_mass_se: f64,
}

/// Monte-Carlo estimates of the vanishing-max-weight and localization
/// conditions along `n_grid`.
///
/// Replication r at grid index j draws n covariates from stream
/// `(seed, j, r, 0)` and `test_points` query points from `(seed, j, r, 1)`;
/// standard errors come from the spread of the per-replication means.
pub fn stone_diagnostics(
    rule: &SchemeRule,
    model: &SyntheticModel,
    n_grid: &[usize],
    eps: f64,
    replications: usize,
    test_points: usize,
    seed: u64,
) -> Result<Vec<StoneRow>> {
    if !(eps > 0.0) {
        return Err(invalid("eps must be positive"));
    }
    if n_grid.is_empty() || replications == 0 || test_points == 0 {
        return Err(invalid("n_grid, replications and test_points must be nonempty"));
    }
    let eps2 = eps * eps;
    n_grid
        .iter()
        .enumerate()
        .map(|(j, &n)| {
            let scheme = rule.at(n)?;
            let per_rep: Vec<(f64, f64)> = (0..replications)
                .into_par_iter()
                .map(|r| {
                    let mut crng = rng::stream(seed, &[j as u64, r as u64, 0]);
                    let cov = model.sample_covariates(n, &mut crng)?;
                    let mut qrng = rng::stream(seed, &[j as u64, r as u64, 1]);
                    let queries = model.sample_covariates(test_points, &mut qrng)?;
                    let index = (cov.dim() == 1).then(|| SortedIndex::new(&cov)).transpose()?;
                    let (mut mw, mut far) = (0.0, 0.0);
                    for x in queries.rows() {
                        let w = match &index {
                            Some(ix) => ix.weights(&scheme, x)?,
                            None => scheme.weights(&cov, x)?,
                        };
                        mw += w.max();
                        far += w
                            .values
                            .iter()
                            .zip(cov.rows())
                            .filter(|(wi, xi)| **wi > 0.0 && dist2(x, xi) > eps2)
                            .map(|(wi, _)| wi)
                            .sum::<f64>();
                    }
                    let t = test_points as f64;
                    Ok((mw / t, far / t))
                })
                .collect::<Result<_>>()?;
            let (m, mse) = mean_se(per_rep.iter().map(|p| p.0));
            let (f, fse) = mean_se(per_rep.iter().map(|p| p.1));
            Ok(StoneRow { n, max_weight: m, max_weight_se: mse, far_mass: f, far_mass_se: fse })
        })
        .collect()
}

/// Sample mean and its standard error (zero for a single value).
pub(crate) fn mean_se(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    if n < 2.0 {
        return (mean, 0.0);
    }
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}
