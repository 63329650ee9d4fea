//! Sliced and max-sliced Wasserstein distances.
//!
//! Both compare the one-dimensional projections u·Y of two measures on R^d.
//! The sliced distance averages W_p^p over directions drawn uniformly on the
//! sphere (normalized Gaussian vectors); the max-sliced distance searches for
//! the worst direction. Directions u and −u give the same projected distance,
//! so the planar search only covers angles in [0, π).

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::measures::{check_order, DiscreteDistribution};
use crate::ot::one_d::wp_pow_sorted;
use crate::rng::{self, StreamRng};

/// Settings shared by the sliced estimators.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlicedConfig {
    pub p: f64,
    /// Monte-Carlo directions (sliced), grid size (max-sliced, d = 2) or
    /// number of ascent starts (max-sliced, d ≥ 3).
    pub num_directions: usize,
    pub seed: u64,
    /// Angular tolerance of the max-sliced refinement.
    pub tolerance: f64,
}

impl SlicedConfig {
    pub fn new(p: f64, num_directions: usize, seed: u64) -> Self {
        Self { p, num_directions, seed, tolerance: 1e-10 }
    }

    fn validate(&self) -> Result<()> {
        check_order(self.p)?;
        if self.num_directions == 0 {
            return Err(invalid("num_directions must be at least 1"));
        }
        if !(self.tolerance > 0.0) {
            return Err(invalid("tolerance must be positive"));
        }
        Ok(())
    }
}

/// Monte-Carlo sliced estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlicedEstimate {
    /// (mean of W_p^p over directions)^(1/p).
    pub distance: f64,
    pub power_mean: f64,
    /// Standard error of `power_mean`.
    pub power_stderr: f64,
    /// Delta-method standard error of `distance`.
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MaxSlicedEstimate {
    pub distance: f64,
    pub direction: Vec<f64>,
}

fn check_pair(a: &DiscreteDistribution, b: &DiscreteDistribution) -> Result<usize> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), got: b.dim() });
    }
    if a.dim() < 2 {
        return Err(Error::Unsupported("sliced distances need d ≥ 2; use the exact 1-D formula".into()));
    }
    Ok(a.dim())
}

/// Uniform direction on the unit sphere of R^d.
pub fn random_direction(rng: &mut StreamRng, d: usize) -> Vec<f64> {
    loop {
        let g: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
        let n = g.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-300 {
            return g.into_iter().map(|x| x / n).collect();
        }
    }
}

/// W_p^p between the projections of `a` and `b` on `direction`.
pub fn projected_wp_pow(
    a: &DiscreteDistribution,
    b: &DiscreteDistribution,
    direction: &[f64],
    p: f64,
) -> Result<f64> {
    let pa = a.project(direction)?;
    let pb = b.project(direction)?;
    Ok(wp_pow_sorted(pa.sorted_atoms()?, pa.cumulative()?, pb.sorted_atoms()?, pb.cumulative()?, p))
}

/// W_p between the projections of `a` and `b` on `direction`.
pub fn projected_wp(
    a: &DiscreteDistribution,
    b: &DiscreteDistribution,
    direction: &[f64],
    p: f64,
) -> Result<f64> {
    Ok(projected_wp_pow(a, b, direction, p)?.max(0.0).powf(1.0 / p))
}

/// Sliced W_p with `cfg.num_directions` uniform directions.
///
/// Directions are drawn from the stream `(cfg.seed, 0)` in index order and
/// evaluated in parallel; the average is reduced in index order, so results do
/// not depend on scheduling.
pub fn sliced_wp(
    a: &DiscreteDistribution,
    b: &DiscreteDistribution,
    cfg: &SlicedConfig,
) -> Result<SlicedEstimate> {
    cfg.validate()?;
    let d = check_pair(a, b)?;
    let mut rng = rng::stream(cfg.seed, &[0]);
    let dirs: Vec<Vec<f64>> = (0..cfg.num_directions).map(|_| random_direction(&mut rng, d)).collect();
    let powers: Vec<f64> = dirs
        .par_iter()
        .map(|u| projected_wp_pow(a, b, u, cfg.p))
        .collect::<Result<_>>()?;
    let n = powers.len() as f64;
    let mean = powers.iter().sum::<f64>() / n;
    let stderr = if powers.len() > 1 {
        let var = powers.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
        (var / n).sqrt()
    } else {
        0.0
    };
    let distance = mean.max(0.0).powf(1.0 / cfg.p);
    let dist_se = if distance > 0.0 { stderr * distance / (cfg.p * mean) } else { 0.0 };
    Ok(SlicedEstimate { distance, power_mean: mean, power_stderr: stderr, stderr: dist_se })
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section maximization of `f` on [lo, hi]; returns the best point seen.
fn golden_max<F: FnMut(f64) -> Result<f64>>(
    mut f: F,
    mut lo: f64,
    mut hi: f64,
    tol: f64,
) -> Result<(f64, f64)> {
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    let mut best = if f1 >= f2 { (x1, f1) } else { (x2, f2) };
    while hi - lo > tol {
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1)?;
            if f1 > best.1 {
                best = (x1, f1);
            }
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2)?;
            if f2 > best.1 {
                best = (x2, f2);
            }
        }
    }
    Ok(best)
}

/// Max-sliced W_p.
///
/// d = 2: the angle θ ∈ [0, π) is scanned on a uniform grid of
/// `cfg.num_directions` points and the bracket around the best grid angle is
/// refined by golden-section search. d ≥ 3: coordinate ascent on the sphere
/// from `cfg.num_directions` random starts. The returned value is the largest
/// projected distance evaluated, hence a lower bound on the true maximum.
pub fn max_sliced_wp(
    a: &DiscreteDistribution,
    b: &DiscreteDistribution,
    cfg: &SlicedConfig,
) -> Result<MaxSlicedEstimate> {
    cfg.validate()?;
    let d = check_pair(a, b)?;
    let p = cfg.p;
    let eval = |u: &[f64]| projected_wp_pow(a, b, u, p);
    let (best_pow, dir) = if d == 2 { planar_search(&eval, cfg)? } else { sphere_ascent(&eval, d, cfg)? };
    Ok(MaxSlicedEstimate { distance: best_pow.max(0.0).powf(1.0 / p), direction: dir })
}

fn planar_search<F>(eval: &F, cfg: &SlicedConfig) -> Result<(f64, Vec<f64>)>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    let n = cfg.num_directions;
    let step = std::f64::consts::PI / n as f64;
    let at = |t: f64| eval(&[t.cos(), t.sin()]);
    let grid: Vec<f64> = (0..n).into_par_iter().map(|k| at(k as f64 * step)).collect::<Result<_>>()?;
    let (kbest, &gbest) = grid
        .iter()
        .enumerate()
        .fold((0, &f64::NEG_INFINITY), |acc, (k, v)| if *v > *acc.1 { (k, v) } else { acc });
    let centre = kbest as f64 * step;
    let (t, v) = golden_max(at, centre - step, centre + step, cfg.tolerance)?;
    Ok(if v > gbest { (v, vec![t.cos(), t.sin()]) } else { (gbest, vec![centre.cos(), centre.sin()]) })
}

fn sphere_ascent<F>(eval: &F, d: usize, cfg: &SlicedConfig) -> Result<(f64, Vec<f64>)>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    let mut rng = rng::stream(cfg.seed, &[1]);
    let starts: Vec<Vec<f64>> = (0..cfg.num_directions).map(|_| random_direction(&mut rng, d)).collect();
    let tol = cfg.tolerance.max(1e-9);
    let results: Vec<(f64, Vec<f64>)> = starts
        .into_par_iter()
        .map(|start| local_ascent(eval, start, tol))
        .collect::<Result<_>>()?;
    let mut best = (f64::NEG_INFINITY, Vec::new());
    for r in results {
        if r.0 > best.0 {
            best = r;
        }
    }
    Ok(best)
}

fn rotate(u: &[f64], w: &[f64], t: f64) -> Vec<f64> {
    let (s, c) = t.sin_cos();
    let v: Vec<f64> = u.iter().zip(w).map(|(a, b)| c * a + s * b).collect();
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / n).collect()
}

fn local_ascent<F>(eval: &F, start: Vec<f64>, tol: f64) -> Result<(f64, Vec<f64>)>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    let d = start.len();
    let mut u = start;
    let mut fu = eval(&u)?;
    let mut radius = std::f64::consts::FRAC_PI_2;
    while radius > tol {
        let mut improved = false;
        for axis in 0..d {
            // unit tangent towards e_axis
            let mut w: Vec<f64> = u.iter().map(|x| -x * u[axis]).collect();
            w[axis] += 1.0;
            let wn = w.iter().map(|x| x * x).sum::<f64>().sqrt();
            if wn < 1e-12 {
                continue;
            }
            w.iter_mut().for_each(|x| *x /= wn);
            let (t, v) = golden_max(|t| eval(&rotate(&u, &w, t)), -radius, radius, tol)?;
            if v > fu {
                u = rotate(&u, &w, t);
                fu = v;
                improved = true;
            }
        }
        if !improved {
            radius *= 0.5;
        }
    }
    Ok((fu, u))
}
