//! Finitely supported probability measures and continuous reference laws.
//!
//! [`DiscreteDistribution`] is the value type of every prediction: a list of
//! atoms in R^d with probability weights. One-dimensional distributions also
//! carry a sorted view (distinct atoms in increasing order with cumulative
//! weights ending exactly at 1), which backs the CDF, the generalized inverse
//! `inf{z : F(z) ≥ u}` and every exact 1-D transport formula.
//!
//! [`AnalyticDistribution1D`] describes continuous laws through their CDF and
//! quantile function; [`GaussianLaw`] and [`UniformLaw`] provide closed forms
//! for the quantile integrals used by the exact W₁ routines.

use crate::error::{invalid, Error, Result};
use crate::quad;
use crate::special::{norm_cdf, norm_pdf, norm_quantile, norm_sf};

/// Row-major list of points in R^dim.
#[derive(Debug, Clone, PartialEq)]
pub struct Points {
    coords: Vec<f64>,
    dim: usize,
}

impl Points {
    pub fn new(coords: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("point dimension must be at least 1"));
        }
        if !coords.len().is_multiple_of(dim) {
            return Err(Error::LengthMismatch {
                what: "coordinate buffer is not a multiple of the dimension",
                left: coords.len(),
                right: dim,
            });
        }
        if let Some(i) = coords.iter().position(|c| !c.is_finite()) {
            return Err(Error::NonFinite(i / dim));
        }
        Ok(Self { coords, dim })
    }

    /// Points on the real line.
    pub fn from_scalars(values: &[f64]) -> Result<Self> {
        Self::new(values.to_vec(), 1)
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let dim = rows.first().map(|r| r.as_ref().len()).unwrap_or(1);
        let mut coords = Vec::with_capacity(rows.len() * dim);
        for r in rows {
            let r = r.as_ref();
            if r.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: r.len() });
            }
            coords.extend_from_slice(r);
        }
        Self::new(coords, dim)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// Subset of rows, in the given order.
    pub fn select(&self, idx: &[usize]) -> Points {
        let mut coords = Vec::with_capacity(idx.len() * self.dim);
        for &i in idx {
            coords.extend_from_slice(self.row(i));
        }
        Points { coords, dim: self.dim }
    }
}

/// Squared Euclidean distance.
#[inline]
pub fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Weights whose sum lies within this distance of 1 (scaled by the support
/// size) are kept bit-for-bit; anything further is divided by its sum.
fn normalization_slack(n: usize) -> f64 {
    8.0 * f64::EPSILON * (n.max(1) as f64)
}

const WEIGHT_FLOOR: f64 = -1e-15;
const SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
struct SortedView {
    values: Vec<f64>,
    /// cumulative[i] = total weight of values[..=i]; the last entry is exactly 1.
    cumulative: Vec<f64>,
}

/// Finitely supported probability measure on R^d.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDistribution {
    atoms: Points,
    weights: Vec<f64>,
    sorted: Option<SortedView>,
}

/// Validate, clean and normalize atoms and weights into a distribution.
///
/// Tiny negative weights (≥ −1e-15) are clamped to zero, zero-weight atoms are
/// dropped and, in dimension one, bitwise-equal atoms are merged (the merged
/// atom keeps the position of its first occurrence).
pub fn make_discrete(atoms: Points, weights: Vec<f64>) -> Result<DiscreteDistribution> {
    if atoms.len() != weights.len() {
        return Err(Error::LengthMismatch {
            what: "atoms and weights",
            left: atoms.len(),
            right: weights.len(),
        });
    }
    let mut w = weights;
    for (i, v) in w.iter_mut().enumerate() {
        if !v.is_finite() {
            return Err(Error::NonFinite(i));
        }
        if *v < WEIGHT_FLOOR {
            return Err(Error::NegativeWeight { index: i, value: *v });
        }
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    let total: f64 = w.iter().sum();
    if (total - 1.0).abs() > SUM_TOLERANCE {
        return Err(Error::NotNormalized(total));
    }

    let keep: Vec<usize> = (0..w.len()).filter(|&i| w[i] > 0.0).collect();
    if keep.is_empty() {
        return Err(Error::EmptySupport);
    }
    let (atoms, mut w) = if keep.len() == w.len() {
        (atoms, w)
    } else {
        (atoms.select(&keep), keep.iter().map(|&i| w[i]).collect())
    };

    let (atoms, w_merged) = if atoms.dim() == 1 {
        merge_duplicates_1d(&atoms, &w)?
    } else {
        (atoms, std::mem::take(&mut w))
    };
    let mut w = w_merged;

    let total: f64 = w.iter().sum();
    if (total - 1.0).abs() > normalization_slack(w.len()) {
        w.iter_mut().for_each(|v| *v /= total);
    }

    let sorted = (atoms.dim() == 1).then(|| build_sorted_view(atoms.coords(), &w));
    Ok(DiscreteDistribution { atoms, weights: w, sorted })
}

fn merge_duplicates_1d(atoms: &Points, w: &[f64]) -> Result<(Points, Vec<f64>)> {
    // -0.0 and 0.0 are the same atom
    let vals: Vec<f64> = atoms.coords().iter().map(|&v| if v == 0.0 { 0.0 } else { v }).collect();
    let mut order: Vec<usize> = (0..vals.len()).collect();
    order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]).then(a.cmp(&b)));
    if order.windows(2).all(|p| vals[p[0]] != vals[p[1]]) {
        return Ok((Points::new(vals, 1)?, w.to_vec()));
    }
    // (first index, value, summed weight) per group
    let mut groups: Vec<(usize, f64, f64)> = Vec::new();
    for &i in &order {
        match groups.last_mut() {
            Some(g) if g.1 == vals[i] => g.2 += w[i],
            _ => groups.push((i, vals[i], w[i])),
        }
    }
    groups.sort_by_key(|g| g.0);
    let merged_vals = groups.iter().map(|g| g.1).collect();
    let merged_w = groups.iter().map(|g| g.2).collect();
    Ok((Points::new(merged_vals, 1)?, merged_w))
}

fn build_sorted_view(values: &[f64], w: &[f64]) -> SortedView {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let sorted_vals: Vec<f64> = order.iter().map(|&i| values[i]).collect();
    let mut cumulative = Vec::with_capacity(order.len());
    let mut acc = 0.0;
    for &i in &order {
        acc += w[i];
        cumulative.push(acc.min(1.0));
    }
    if let Some(last) = cumulative.last_mut() {
        *last = 1.0;
    }
    SortedView { values: sorted_vals, cumulative }
}

impl DiscreteDistribution {
    /// Dirac mass at `point`.
    pub fn dirac(point: &[f64]) -> Result<Self> {
        make_discrete(Points::new(point.to_vec(), point.len())?, vec![1.0])
    }

    /// One-dimensional distribution from scalar atoms.
    pub fn from_1d(atoms: &[f64], weights: &[f64]) -> Result<Self> {
        make_discrete(Points::from_scalars(atoms)?, weights.to_vec())
    }

    /// Uniform weights over the given rows.
    pub fn uniform(atoms: Points) -> Result<Self> {
        let n = atoms.len();
        if n == 0 {
            return Err(Error::EmptySupport);
        }
        make_discrete(atoms, vec![1.0 / n as f64; n])
    }

    pub fn dim(&self) -> usize {
        self.atoms.dim()
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn atoms(&self) -> &Points {
        &self.atoms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    fn view(&self) -> Result<&SortedView> {
        self.sorted.as_ref().ok_or(Error::DimensionMismatch { expected: 1, got: self.dim() })
    }

    /// Distinct atoms in increasing order (dimension one only).
    pub fn sorted_atoms(&self) -> Result<&[f64]> {
        Ok(&self.view()?.values)
    }

    /// Cumulative weights aligned with [`Self::sorted_atoms`]; the last entry is 1.
    pub fn cumulative(&self) -> Result<&[f64]> {
        Ok(&self.view()?.cumulative)
    }

    /// F(z) = total weight of atoms ≤ z.
    pub fn cdf(&self, z: f64) -> Result<f64> {
        let v = self.view()?;
        let k = v.values.partition_point(|&a| a <= z);
        Ok(if k == 0 { 0.0 } else { v.cumulative[k - 1] })
    }

    /// Generalized inverse inf{z : F(z) ≥ u} for u in (0, 1).
    pub fn quantile(&self, u: f64) -> Result<f64> {
        let v = self.view()?;
        if !(u > 0.0 && u < 1.0) {
            return Err(Error::OutOfRange { value: u, range: "(0, 1)" });
        }
        let k = v.cumulative.partition_point(|&c| c < u);
        Ok(v.values[k.min(v.values.len() - 1)])
    }

    /// M_p = (Σ w ‖y‖^p)^(1/p).
    pub fn moment_p(&self, p: f64) -> Result<f64> {
        check_order(p)?;
        let s: f64 = self
            .atoms
            .rows()
            .zip(&self.weights)
            .map(|(y, w)| w * norm(y).powf(p))
            .sum();
        Ok(s.powf(1.0 / p))
    }

    /// Weighted mean Σ w y.
    pub fn mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.dim()];
        for (y, w) in self.atoms.rows().zip(&self.weights) {
            for (mj, yj) in m.iter_mut().zip(y) {
                *mj += w * yj;
            }
        }
        m
    }

    /// ∫ √(F(z)(1 − F(z))) dz, evaluated exactly over the gaps between atoms.
    pub fn dispersion(&self) -> Result<f64> {
        let v = self.view()?;
        Ok(v.values
            .windows(2)
            .zip(&v.cumulative)
            .map(|(gap, &c)| (gap[1] - gap[0]) * (c * (1.0 - c)).max(0.0).sqrt())
            .sum())
    }

    /// Pushforward under y ↦ u·y.
    pub fn project(&self, direction: &[f64]) -> Result<DiscreteDistribution> {
        if direction.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: direction.len() });
        }
        let vals: Vec<f64> = self
            .atoms
            .rows()
            .map(|y| y.iter().zip(direction).map(|(a, b)| a * b).sum())
            .collect();
        make_discrete(Points::new(vals, 1)?, self.weights.clone())
    }

    /// Same measure with bitwise-equal atoms merged in any dimension; atoms
    /// keep the order of their first occurrence.
    pub fn compact(&self) -> Result<DiscreteDistribution> {
        if self.dim() == 1 {
            return Ok(self.clone());
        }
        let key = |y: &[f64]| y.iter().map(|v| if *v == 0.0 { 0u64 } else { v.to_bits() }).collect::<Vec<u64>>();
        let mut first: std::collections::HashMap<Vec<u64>, usize> = std::collections::HashMap::new();
        let mut rows: Vec<usize> = Vec::new();
        let mut w: Vec<f64> = Vec::new();
        for (i, y) in self.atoms.rows().enumerate() {
            match first.entry(key(y)) {
                std::collections::hash_map::Entry::Occupied(e) => w[*e.get()] += self.weights[i],
                std::collections::hash_map::Entry::Vacant(e) => {
                    e.insert(rows.len());
                    rows.push(i);
                    w.push(self.weights[i]);
                }
            }
        }
        make_discrete(self.atoms.select(&rows), w)
    }
}

pub(crate) fn check_order(p: f64) -> Result<()> {
    if p >= 1.0 && p.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("order p must be a finite value ≥ 1, got {p}")))
    }
}

/// Continuous law on the real line described by its CDF and quantile function.
pub trait AnalyticDistribution1D: Send + Sync + std::fmt::Debug {
    fn cdf(&self, z: f64) -> f64;

    fn sf(&self, z: f64) -> f64 {
        1.0 - self.cdf(z)
    }

    /// Generalized inverse; clamps to the support bounds outside (0, 1).
    fn quantile(&self, u: f64) -> f64;

    /// Support bounds, possibly infinite.
    fn support(&self) -> (f64, f64);

    /// A finite window outside which CDF-type tail integrands are below 1e-12,
    /// or `None` when no such window is known.
    fn integration_window(&self) -> Option<(f64, f64)> {
        let (lo, hi) = self.support();
        (lo.is_finite() && hi.is_finite()).then_some((lo, hi))
    }

    /// ∫ₐᵇ F⁻¹(u) du for 0 ≤ a ≤ b ≤ 1.
    fn quantile_integral(&self, a: f64, b: f64) -> Result<f64> {
        quad::integrate(|u| self.quantile(u), a, b, 1e-10)
    }

    fn mean(&self) -> Result<f64> {
        self.quantile_integral(0.0, 1.0)
    }

    /// (E|Y|^p)^(1/p) via E|Y|^p = ∫₀^∞ p z^(p−1) P(|Y| > z) dz.
    fn moment_p(&self, p: f64) -> Result<f64> {
        check_order(p)?;
        let (lo, hi) = self
            .integration_window()
            .ok_or_else(|| Error::Unsupported("moment of a law without an integration window".into()))?;
        let zmax = lo.abs().max(hi.abs());
        let tail = |z: f64| p * z.powf(p - 1.0) * (self.sf(z) + self.cdf(-z)).min(1.0);
        Ok(quad::integrate(tail, 0.0, zmax, 1e-10)?.powf(1.0 / p))
    }

    /// M(x) = ∫ √(F(1 − F)) over the integration window.
    fn dispersion(&self) -> Result<f64> {
        let (lo, hi) = self.integration_window().ok_or_else(|| {
            Error::Unsupported("dispersion of an unbounded law with no integrable-tail window".into())
        })?;
        quad::integrate(|z| (self.cdf(z) * self.sf(z)).max(0.0).sqrt(), lo, hi, 1e-8)
    }
}

/// N(mean, sd²).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianLaw {
    pub mean: f64,
    pub sd: f64,
}

/// Half-width of the Gaussian integration window, in standard deviations.
/// At 12σ even √(F(1−F)) is below 1e-16.
pub const GAUSSIAN_WINDOW_SDS: f64 = 12.0;

impl GaussianLaw {
    pub fn new(mean: f64, sd: f64) -> Result<Self> {
        if !(sd > 0.0 && sd.is_finite() && mean.is_finite()) {
            return Err(invalid(format!("gaussian needs finite mean and sd > 0 (sd={sd})")));
        }
        Ok(Self { mean, sd })
    }
}

impl AnalyticDistribution1D for GaussianLaw {
    fn cdf(&self, z: f64) -> f64 {
        norm_cdf((z - self.mean) / self.sd)
    }

    fn sf(&self, z: f64) -> f64 {
        norm_sf((z - self.mean) / self.sd)
    }

    fn quantile(&self, u: f64) -> f64 {
        if u <= 0.0 {
            f64::NEG_INFINITY
        } else if u >= 1.0 {
            f64::INFINITY
        } else {
            self.mean + self.sd * norm_quantile(u)
        }
    }

    fn support(&self) -> (f64, f64) {
        (f64::NEG_INFINITY, f64::INFINITY)
    }

    fn integration_window(&self) -> Option<(f64, f64)> {
        let w = GAUSSIAN_WINDOW_SDS * self.sd;
        Some((self.mean - w, self.mean + w))
    }

    fn quantile_integral(&self, a: f64, b: f64) -> Result<f64> {
        // ∫ Φ⁻¹ = −φ(Φ⁻¹(u)), with φ(Φ⁻¹(0)) = φ(Φ⁻¹(1)) = 0
        let dens = |u: f64| if u <= 0.0 || u >= 1.0 { 0.0 } else { norm_pdf(norm_quantile(u)) };
        Ok(self.mean * (b - a) + self.sd * (dens(a) - dens(b)))
    }

    fn mean(&self) -> Result<f64> {
        Ok(self.mean)
    }
}

/// Uniform law on [lo, hi].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformLaw {
    pub lo: f64,
    pub hi: f64,
}

impl UniformLaw {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi && lo.is_finite() && hi.is_finite()) {
            return Err(invalid(format!("uniform needs lo < hi (got [{lo}, {hi}])")));
        }
        Ok(Self { lo, hi })
    }
}

impl AnalyticDistribution1D for UniformLaw {
    fn cdf(&self, z: f64) -> f64 {
        ((z - self.lo) / (self.hi - self.lo)).clamp(0.0, 1.0)
    }

    fn sf(&self, z: f64) -> f64 {
        ((self.hi - z) / (self.hi - self.lo)).clamp(0.0, 1.0)
    }

    fn quantile(&self, u: f64) -> f64 {
        self.lo + (self.hi - self.lo) * u.clamp(0.0, 1.0)
    }

    fn support(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    fn quantile_integral(&self, a: f64, b: f64) -> Result<f64> {
        Ok(self.lo * (b - a) + 0.5 * (self.hi - self.lo) * (b * b - a * a))
    }

    fn mean(&self) -> Result<f64> {
        Ok(0.5 * (self.lo + self.hi))
    }

    /// (hi − lo) · π/8.
    fn dispersion(&self) -> Result<f64> {
        Ok((self.hi - self.lo) * std::f64::consts::FRAC_PI_8)
    }
}

/// A conditional law as produced by a synthetic model.
#[derive(Debug, Clone, PartialEq)]
pub enum ConditionalLaw {
    Discrete(DiscreteDistribution),
    Gaussian(GaussianLaw),
    Uniform(UniformLaw),
}

impl ConditionalLaw {
    pub fn dim(&self) -> usize {
        match self {
            ConditionalLaw::Discrete(d) => d.dim(),
            _ => 1,
        }
    }

    pub fn as_analytic(&self) -> Option<&dyn AnalyticDistribution1D> {
        match self {
            ConditionalLaw::Discrete(_) => None,
            ConditionalLaw::Gaussian(g) => Some(g),
            ConditionalLaw::Uniform(u) => Some(u),
        }
    }

    pub fn as_discrete(&self) -> Option<&DiscreteDistribution> {
        match self {
            ConditionalLaw::Discrete(d) => Some(d),
            _ => None,
        }
    }

    /// M(x) for either representation.
    pub fn dispersion(&self) -> Result<f64> {
        match self {
            ConditionalLaw::Discrete(d) => d.dispersion(),
            ConditionalLaw::Gaussian(g) => g.dispersion(),
            ConditionalLaw::Uniform(u) => u.dispersion(),
        }
    }

    pub fn cdf(&self, z: f64) -> Result<f64> {
        match self.as_analytic() {
            Some(a) => Ok(a.cdf(z)),
            None => self.as_discrete().expect("discrete").cdf(z),
        }
    }

    pub fn quantile(&self, u: f64) -> Result<f64> {
        if !(u > 0.0 && u < 1.0) {
            return Err(Error::OutOfRange { value: u, range: "(0, 1)" });
        }
        match self.as_analytic() {
            Some(a) => Ok(a.quantile(u)),
            None => self.as_discrete().expect("discrete").quantile(u),
        }
    }

    pub fn mean(&self) -> Result<Vec<f64>> {
        match self.as_analytic() {
            Some(a) => Ok(vec![a.mean()?]),
            None => Ok(self.as_discrete().expect("discrete").mean()),
        }
    }
}
