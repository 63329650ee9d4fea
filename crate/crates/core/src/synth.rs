//! Synthetic models with known conditional laws.
//!
//! Covariates are uniform on [0, 1]^k. Each model declares the class
//! parameters (H, L, M) it is meant to satisfy; [`SyntheticModel::certify_class`]
//! checks the declaration on a grid.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::bounds::ClassParams;
use crate::error::{invalid, Error, Result};
use crate::measures::{make_discrete, norm, ConditionalLaw, DiscreteDistribution, GaussianLaw, Points, UniformLaw};
use crate::ot::wp_exact;
use crate::regressor::Dataset;
use crate::rng::{self, StreamRng};

/// Real-valued map on [0, 1]^k with a known Hölder constant.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum HolderMap {
    /// intercept + slope · x; Lipschitz with constant ‖slope‖.
    Affine { intercept: f64, slope: Vec<f64> },
    /// intercept + scale · ‖x − center‖^exponent; Hölder of that exponent with
    /// constant |scale|.
    Radial { intercept: f64, scale: f64, center: Vec<f64>, exponent: f64 },
}

impl HolderMap {
    pub fn dim(&self) -> usize {
        match self {
            HolderMap::Affine { slope, .. } => slope.len(),
            HolderMap::Radial { center, .. } => center.len(),
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            HolderMap::Affine { intercept, slope } => intercept + slope.iter().zip(x).map(|(a, b)| a * b).sum::<f64>(),
            HolderMap::Radial { intercept, scale, center, exponent } => {
                let d: Vec<f64> = x.iter().zip(center).map(|(a, c)| a - c).collect();
                intercept + scale * norm(&d).powf(*exponent)
            }
        }
    }

    /// Hölder exponent and constant.
    pub fn holder(&self) -> (f64, f64) {
        match self {
            HolderMap::Affine { slope, .. } => (1.0, norm(slope)),
            HolderMap::Radial { scale, exponent, .. } => (*exponent, scale.abs()),
        }
    }

    /// Range over [0, 1]^k, from the vertices (affine) or the distance range (radial).
    fn range(&self) -> (f64, f64) {
        match self {
            HolderMap::Affine { intercept, slope } => {
                let lo: f64 = slope.iter().map(|s| s.min(0.0)).sum();
                let hi: f64 = slope.iter().map(|s| s.max(0.0)).sum();
                (intercept + lo, intercept + hi)
            }
            HolderMap::Radial { intercept, scale, center, exponent } => {
                let near: f64 = center.iter().map(|c| (c.clamp(0.0, 1.0) - c).powi(2)).sum::<f64>().sqrt();
                let far: f64 = center.iter().map(|c| c.max(1.0 - c).powi(2)).sum::<f64>().sqrt();
                let (a, b) = (scale * near.powf(*exponent), scale * far.powf(*exponent));
                (intercept + a.min(b), intercept + a.max(b))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum ModelKind {
    /// Y ∈ {0, B} with P(Y = B | X = x) = p(x).
    Binary { b: f64, prob: HolderMap },
    GaussianLocation { mean: HolderMap, sigma: f64 },
    /// Y | X = x uniform on [m(x) − width/2, m(x) + width/2].
    UniformLocation { mean: HolderMap, width: f64 },
    /// Y = (Y₁, Y₂) with independent components Y_j ∈ {0, B}, P(Y_j = B) = p_j(x).
    IndependentBinaryPair { b: f64, p1: HolderMap, p2: HolderMap },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SyntheticModel {
    pub name: String,
    pub kind: ModelKind,
    pub params: ClassParams,
}

/// Outcome of a grid check of the class conditions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertifyReport {
    pub model: String,
    pub resolution: usize,
    pub declared: ClassParams,
    /// max over grid pairs of W₁(F_x, F_x') / (L ‖x − x'‖^H).
    pub max_ratio: f64,
    /// max over grid points of M(x); absent for responses in R^d, d ≥ 2.
    pub max_dispersion: Option<f64>,
    /// min(1 − max_ratio, 1 − max M(x)/M).
    pub margin: f64,
    pub passed: bool,
}

pub const PRESET_NAMES: &[&str] =
    &["binary-k1", "binary-k2", "gaussian-k1", "uniform-k1", "binary-pair-k1", "holder-k1"];

fn affine(intercept: f64, slope: &[f64]) -> HolderMap {
    HolderMap::Affine { intercept, slope: slope.to_vec() }
}

impl SyntheticModel {
    pub fn new(name: impl Into<String>, kind: ModelKind, params: ClassParams) -> Result<Self> {
        params.validate()?;
        let m = Self { name: name.into(), kind, params };
        m.validate()?;
        Ok(m)
    }

    fn maps(&self) -> Vec<&HolderMap> {
        match &self.kind {
            ModelKind::Binary { prob, .. } => vec![prob],
            ModelKind::GaussianLocation { mean, .. } | ModelKind::UniformLocation { mean, .. } => vec![mean],
            ModelKind::IndependentBinaryPair { p1, p2, .. } => vec![p1, p2],
        }
    }

    fn validate(&self) -> Result<()> {
        for m in self.maps() {
            if m.dim() != self.params.k {
                return Err(Error::DimensionMismatch { expected: self.params.k, got: m.dim() });
            }
        }
        match &self.kind {
            ModelKind::Binary { b, prob } => check_prob(*b, &[prob]),
            ModelKind::IndependentBinaryPair { b, p1, p2 } => check_prob(*b, &[p1, p2]),
            ModelKind::GaussianLocation { sigma, .. } if !(*sigma > 0.0) => Err(invalid("sigma must be positive")),
            ModelKind::UniformLocation { width, .. } if !(*width > 0.0) => Err(invalid("width must be positive")),
            _ => Ok(()),
        }
    }

    /// Shipped presets; see [`PRESET_NAMES`].
    pub fn preset(name: &str) -> Result<Self> {
        let (kind, params) = match name {
            "binary-k1" => (
                ModelKind::Binary { b: 1.0, prob: affine(0.25, &[0.5]) },
                ClassParams::new(1.0, 1.0, 0.55, 1)?,
            ),
            "binary-k2" => (
                ModelKind::Binary { b: 1.0, prob: affine(0.25, &[0.25, 0.25]) },
                ClassParams::new(1.0, 1.0, 0.55, 2)?,
            ),
            "gaussian-k1" => (
                ModelKind::GaussianLocation { mean: affine(0.0, &[0.5]), sigma: 0.25 },
                ClassParams::new(1.0, 1.0, 0.43, 1)?,
            ),
            "uniform-k1" => (
                ModelKind::UniformLocation { mean: affine(0.0, &[0.5]), width: 0.5 },
                ClassParams::new(1.0, 1.0, 0.21, 1)?,
            ),
            "binary-pair-k1" => (
                ModelKind::IndependentBinaryPair { b: 1.0, p1: affine(0.25, &[0.5]), p2: affine(0.75, &[-0.25]) },
                ClassParams::new(1.0, 1.0, 0.55, 1)?,
            ),
            "holder-k1" => (
                ModelKind::Binary {
                    b: 1.0,
                    prob: HolderMap::Radial { intercept: 0.25, scale: 0.5, center: vec![0.5], exponent: 0.5 },
                },
                ClassParams::new(0.5, 1.0, 0.55, 1)?,
            ),
            other => return Err(invalid(format!("unknown model preset '{other}' (known: {})", PRESET_NAMES.join(", ")))),
        };
        Self::new(name, kind, params)
    }

    pub fn k(&self) -> usize {
        self.params.k
    }

    /// Response dimension.
    pub fn d(&self) -> usize {
        match self.kind {
            ModelKind::IndependentBinaryPair { .. } => 2,
            _ => 1,
        }
    }

    /// Draw `n` covariates uniformly on [0, 1]^k.
    pub fn sample_covariates(&self, n: usize, rng: &mut StreamRng) -> Result<Points> {
        let coords: Vec<f64> = (0..n * self.k()).map(|_| rng.random::<f64>()).collect();
        Points::new(coords, self.k())
    }

    fn sample_response(&self, x: &[f64], rng: &mut StreamRng, out: &mut Vec<f64>) {
        match &self.kind {
            ModelKind::Binary { b, prob } => out.push(if rng.random::<f64>() < prob.eval(x) { *b } else { 0.0 }),
            ModelKind::GaussianLocation { mean, sigma } => {
                let z: f64 = StandardNormal.sample(rng);
                out.push(mean.eval(x) + sigma * z);
            }
            ModelKind::UniformLocation { mean, width } => {
                out.push(mean.eval(x) + width * (rng.random::<f64>() - 0.5));
            }
            ModelKind::IndependentBinaryPair { b, p1, p2 } => {
                out.push(if rng.random::<f64>() < p1.eval(x) { *b } else { 0.0 });
                out.push(if rng.random::<f64>() < p2.eval(x) { *b } else { 0.0 });
            }
        }
    }

    /// i.i.d. sample drawn from `rng`: all covariates first, then responses.
    pub fn sample_with(&self, n: usize, rng: &mut StreamRng) -> Result<Dataset> {
        if n == 0 {
            return Err(Error::EmptySample);
        }
        let cov = self.sample_covariates(n, rng)?;
        let mut resp = Vec::with_capacity(n * self.d());
        for x in cov.rows() {
            self.sample_response(x, rng, &mut resp);
        }
        Dataset::new(cov, Points::new(resp, self.d())?)
    }

    /// Sample fully determined by `(self, n, seed)`.
    pub fn sample(&self, n: usize, seed: u64) -> Result<Dataset> {
        self.sample_with(n, &mut rng::stream(seed, &[n as u64]))
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.k() {
            return Err(Error::DimensionMismatch { expected: self.k(), got: x.len() });
        }
        match x.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            Some(&v) => Err(Error::OutOfRange { value: v, range: "[0, 1]" }),
            None => Ok(()),
        }
    }

    /// F_x, the exact conditional law of Y given X = x.
    pub fn conditional_law(&self, x: &[f64]) -> Result<ConditionalLaw> {
        self.check_point(x)?;
        Ok(match &self.kind {
            ModelKind::Binary { b, prob } => ConditionalLaw::Discrete(binary_law(*b, prob.eval(x))?),
            ModelKind::GaussianLocation { mean, sigma } => ConditionalLaw::Gaussian(GaussianLaw::new(mean.eval(x), *sigma)?),
            ModelKind::UniformLocation { mean, width } => {
                let m = mean.eval(x);
                ConditionalLaw::Uniform(UniformLaw::new(m - width / 2.0, m + width / 2.0)?)
            }
            ModelKind::IndependentBinaryPair { b, p1, p2 } => ConditionalLaw::Discrete(pair_law(*b, p1.eval(x), p2.eval(x))?),
        })
    }

    /// W₁(F_x, F_x'): B|p(x) − p(x')| for binary laws, |m(x) − m(x')| for
    /// location families, exact transport for the binary pair.
    pub fn exact_w1(&self, x: &[f64], xp: &[f64]) -> Result<f64> {
        self.check_point(x)?;
        self.check_point(xp)?;
        match &self.kind {
            ModelKind::Binary { b, prob } => Ok(b * (prob.eval(x) - prob.eval(xp)).abs()),
            ModelKind::GaussianLocation { mean, .. } | ModelKind::UniformLocation { mean, .. } => {
                Ok((mean.eval(x) - mean.eval(xp)).abs())
            }
            ModelKind::IndependentBinaryPair { b, p1, p2 } => {
                let a = pair_law(*b, p1.eval(x), p2.eval(x))?;
                let c = pair_law(*b, p1.eval(xp), p2.eval(xp))?;
                Ok(wp_exact(&a, &c, 1.0)?.0)
            }
        }
    }

    /// E[Y] averaged over the covariate distribution, for one-dimensional
    /// responses with an affine mean map; used as a sampling check.
    pub fn marginal_mean(&self) -> Option<f64> {
        let avg = |m: &HolderMap| match m {
            HolderMap::Affine { intercept, slope } => Some(intercept + 0.5 * slope.iter().sum::<f64>()),
            HolderMap::Radial { .. } => None,
        };
        match &self.kind {
            ModelKind::Binary { b, prob } => avg(prob).map(|p| b * p),
            ModelKind::GaussianLocation { mean, .. } | ModelKind::UniformLocation { mean, .. } => avg(mean),
            ModelKind::IndependentBinaryPair { .. } => None,
        }
    }

    /// Grid check of the Hölder condition (all pairs of grid points with
    /// spacing 1/resolution per axis) and of M(x) ≤ M at the grid points.
    pub fn certify_class(&self, resolution: usize) -> Result<CertifyReport> {
        if resolution == 0 {
            return Err(invalid("resolution must be positive"));
        }
        let k = self.k();
        let per_axis = resolution + 1;
        let total = per_axis.pow(k as u32);
        let grid: Vec<Vec<f64>> = (0..total)
            .map(|mut idx| {
                (0..k)
                    .map(|_| {
                        let c = idx % per_axis;
                        idx /= per_axis;
                        c as f64 / resolution as f64
                    })
                    .collect()
            })
            .collect();
        let p = self.params;
        let ratios: Vec<f64> = (0..total)
            .into_par_iter()
            .map(|i| {
                let mut worst = 0.0f64;
                for j in i + 1..total {
                    let d: Vec<f64> = grid[i].iter().zip(&grid[j]).map(|(a, b)| a - b).collect();
                    let w = self.exact_w1(&grid[i], &grid[j])?;
                    worst = worst.max(w / (p.l * norm(&d).powf(p.h)));
                }
                Ok(worst)
            })
            .collect::<Result<_>>()?;
        let max_ratio = ratios.into_iter().fold(0.0, f64::max);
        let max_dispersion = if self.d() == 1 {
            let m: Vec<f64> = grid
                .par_iter()
                .map(|x| self.conditional_law(x)?.dispersion())
                .collect::<Result<_>>()?;
            Some(m.into_iter().fold(0.0, f64::max))
        } else {
            None
        };
        let mut margin = 1.0 - max_ratio;
        if let Some(m) = max_dispersion {
            margin = margin.min(1.0 - m / p.m);
        }
        Ok(CertifyReport {
            model: self.name.clone(),
            resolution,
            declared: p,
            max_ratio,
            max_dispersion,
            margin,
            passed: margin >= 0.0,
        })
    }
}

fn check_prob(b: f64, maps: &[&HolderMap]) -> Result<()> {
    if !(b > 0.0 && b.is_finite()) {
        return Err(invalid("B must be positive"));
    }
    for m in maps {
        let (lo, hi) = m.range();
        if lo < 0.0 || hi > 1.0 {
            return Err(invalid(format!("probability map ranges over [{lo}, {hi}], outside [0, 1]")));
        }
    }
    Ok(())
}

/// (1 − p) δ₀ + p δ_B.
pub fn binary_law(b: f64, p: f64) -> Result<DiscreteDistribution> {
    make_discrete(Points::from_scalars(&[0.0, b])?, vec![1.0 - p, p])
}

fn pair_law(b: f64, p1: f64, p2: f64) -> Result<DiscreteDistribution> {
    let atoms = Points::from_rows(&[[0.0, 0.0], [b, 0.0], [0.0, b], [b, b]])?;
    make_discrete(atoms, vec![(1.0 - p1) * (1.0 - p2), p1 * (1.0 - p2), (1.0 - p1) * p2, p1 * p2])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_are_valid() {
        for name in PRESET_NAMES {
            let m = SyntheticModel::preset(name).unwrap();
            assert_eq!(m.name, *name);
            let law = m.conditional_law(&vec![0.3; m.k()]).unwrap();
            assert_eq!(law.dim(), m.d());
        }
        assert!(SyntheticModel::preset("nope").is_err());
    }

    #[test]
    fn binary_law_and_w1() {
        let m = SyntheticModel::new(
            "b",
            ModelKind::Binary { b: 2.0, prob: affine(0.2, &[0.5]) },
            ClassParams::new(1.0, 1.0, 1.1, 1).unwrap(),
        )
        .unwrap();
        let law = m.conditional_law(&[0.2]).unwrap();
        let d = law.as_discrete().unwrap();
        assert_eq!(d.sorted_atoms().unwrap(), &[0.0, 2.0]);
        assert!((d.cdf(0.0).unwrap() - 0.7).abs() < 1e-15);
        assert!((m.exact_w1(&[0.2], &[0.6]).unwrap() - 0.4).abs() < 1e-15);
        assert_eq!(m.exact_w1(&[0.4], &[0.4]).unwrap(), 0.0);
        assert!(m.conditional_law(&[1.2]).is_err());
    }

    #[test]
    fn location_laws() {
        let g = SyntheticModel::preset("gaussian-k1").unwrap();
        assert!((g.conditional_law(&[0.4]).unwrap().quantile(0.5).unwrap() - 0.2).abs() < 1e-15);
        assert!((g.exact_w1(&[0.2], &[0.6]).unwrap() - 0.2).abs() < 1e-15);
        let u = SyntheticModel::preset("uniform-k1").unwrap();
        let m = u.conditional_law(&[0.9]).unwrap().dispersion().unwrap();
        assert!((m - std::f64::consts::PI / 8.0 * 0.5).abs() < 1e-10);
    }

    #[test]
    fn sampling_is_deterministic() {
        let m = SyntheticModel::preset("binary-k2").unwrap();
        let a = m.sample(50, 9).unwrap();
        assert_eq!(a, m.sample(50, 9).unwrap());
        assert_ne!(a, m.sample(50, 10).unwrap());
        assert!(a.responses().coords().iter().all(|&y| y == 0.0 || y == 1.0));
        assert!(a.in_unit_cube());
    }

    #[test]
    fn invalid_models_rejected() {
        let p = ClassParams::new(1.0, 1.0, 1.0, 1).unwrap();
        assert!(SyntheticModel::new("x", ModelKind::Binary { b: 1.0, prob: affine(0.8, &[0.5]) }, p).is_err());
        assert!(SyntheticModel::new("x", ModelKind::Binary { b: 1.0, prob: affine(0.2, &[0.5, 0.1]) }, p).is_err());
        assert!(SyntheticModel::new("x", ModelKind::GaussianLocation { mean: affine(0.0, &[1.0]), sigma: 0.0 }, p).is_err());
    }

    #[test]
    fn certification_examples() {
        // p(x) = 1/2 + (L/(2B)) x₁ with B = L = 1
        let m = SyntheticModel::new(
            "half",
            ModelKind::Binary { b: 1.0, prob: affine(0.5, &[0.5]) },
            ClassParams::new(1.0, 1.0, 0.55, 1).unwrap(),
        )
        .unwrap();
        let r = m.certify_class(64).unwrap();
        assert!((r.max_ratio - 0.5).abs() < 1e-12);
        assert!(r.passed);
        let flat = SyntheticModel::new(
            "flat",
            ModelKind::Binary { b: 1.0, prob: affine(0.3, &[0.0]) },
            ClassParams::new(1.0, 1.0, 0.55, 1).unwrap(),
        )
        .unwrap();
        assert_eq!(flat.certify_class(16).unwrap().max_ratio, 0.0);
        let tight = SyntheticModel::new(
            "tight",
            ModelKind::Binary { b: 1.0, prob: affine(0.25, &[0.5]) },
            ClassParams::new(1.0, 0.4, 0.55, 1).unwrap(),
        )
        .unwrap();
        assert!(!tight.certify_class(16).unwrap().passed);
    }
}
