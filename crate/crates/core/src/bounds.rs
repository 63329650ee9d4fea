//! Closed-form W₁ risk bounds over the Hölder class D(H, L, M).

use serde::Serialize;

use crate::error::{invalid, Result};
use crate::regressor::FittedRegressor;
use crate::synth::SyntheticModel;
use crate::weights::WeightVector;

/// Hölder class parameters: exponent H ∈ (0, 1], constant L, dispersion bound
/// M and covariate dimension k.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassParams {
    pub h: f64,
    pub l: f64,
    pub m: f64,
    pub k: usize,
}

impl ClassParams {
    pub fn new(h: f64, l: f64, m: f64, k: usize) -> Result<Self> {
        let p = Self { h, l, m, k };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.h > 0.0 && self.h <= 1.0) {
            return Err(invalid(format!("Hölder exponent must lie in (0, 1], got {}", self.h)));
        }
        if !(self.l > 0.0 && self.l.is_finite() && self.m > 0.0 && self.m.is_finite()) {
            return Err(invalid("L and M must be positive"));
        }
        if self.k == 0 {
            return Err(invalid("covariate dimension must be at least 1"));
        }
        Ok(())
    }

    /// Covering constant k^{k/2}.
    pub fn covering_constant(&self) -> f64 {
        let k = self.k as f64;
        k.powf(k / 2.0)
    }
}

/// Approximation plus estimation decomposition of a bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundReport {
    pub approximation: f64,
    pub estimation: f64,
    pub total: f64,
}

impl BoundReport {
    fn new(approximation: f64, estimation: f64) -> Self {
        Self { approximation, estimation, total: approximation + estimation }
    }
}

/// 1 / Σ W_i².
pub fn effective_sample_size(w: &WeightVector) -> f64 {
    1.0 / w.sum_of_squares()
}

/// Conditional-on-covariates bound at `x`:
/// Σ W_i W₁(F_{X_i}, F_x) + M(x) (Σ W_i²)^{1/2}.
pub fn proposition_bound_empirical(
    model: &FittedRegressor<'_>,
    truth: &SyntheticModel,
    x: &[f64],
) -> Result<BoundReport> {
    let w = model.weights(x)?;
    let cov = model.dataset().covariates();
    let mut approx = 0.0;
    for i in w.support() {
        approx += w.values[i] * truth.exact_w1(cov.row(i), x)?;
    }
    let m = truth.conditional_law(x)?.dispersion()?;
    Ok(BoundReport::new(approx, m * w.sum_of_squares().sqrt()))
}

/// Uniform-kernel bound
/// L h^H + M √((2 + 1/n) c_k) (n h^k)^{-1/2} + L k^{H/2} c_k (n h^k)^{-1},
/// with c_k = k^{k/2} unless overridden.
pub fn kernel_bound(params: &ClassParams, n: usize, h: f64, c_k: Option<f64>) -> Result<BoundReport> {
    params.validate()?;
    if n == 0 || !(h > 0.0) {
        return Err(invalid("kernel bound needs n ≥ 1 and h > 0"));
    }
    let ck = match c_k {
        Some(c) if c > 0.0 => c,
        Some(c) => return Err(invalid(format!("c_k must be positive, got {c}"))),
        None => params.covering_constant(),
    };
    let (nf, kf) = (n as f64, params.k as f64);
    let nhk = nf * h.powf(kf);
    let bias = params.l * h.powf(params.h);
    let spill = params.l * kf.powf(params.h / 2.0) * ck / nhk;
    let est = params.m * ((2.0 + 1.0 / nf) * ck).sqrt() / nhk.sqrt();
    Ok(BoundReport::new(bias + spill, est))
}

/// Nearest-neighbor bound L 8^{H/2} (κ/n)^{H/2} + M κ^{-1/2} for k = 1 and
/// L c̃_k^{H/2} (κ/n)^{H/k} + M κ^{-1/2} for k ≥ 2. The constant c̃_k has no
/// default and must be supplied when k ≥ 2.
pub fn knn_bound(params: &ClassParams, n: usize, kappa: usize, tilde_c_k: Option<f64>) -> Result<BoundReport> {
    params.validate()?;
    if kappa == 0 || kappa > n {
        return Err(invalid(format!("kappa = {kappa} outside 1..={n}")));
    }
    let ratio = kappa as f64 / n as f64;
    let approx = if params.k == 1 {
        params.l * 8f64.powf(params.h / 2.0) * ratio.powf(params.h / 2.0)
    } else {
        let c = tilde_c_k.ok_or_else(|| invalid("tilde_c_k is required for k ≥ 2"))?;
        if !(c > 0.0) {
            return Err(invalid(format!("tilde_c_k must be positive, got {c}")));
        }
        params.l * c.powf(params.h / 2.0) * ratio.powf(params.h / params.k as f64)
    };
    Ok(BoundReport::new(approx, params.m / (kappa as f64).sqrt()))
}

/// Minimax exponent and rate-optimal tuning schedules for the class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MinimaxRate {
    /// −H/(2H + k).
    pub exponent: f64,
    /// Exponent a in h(n) ∝ n^a.
    pub bandwidth_exponent: f64,
    /// Exponent b in κ(n) ∝ n^b minimizing the nearest-neighbor bound.
    pub neighbors_exponent: f64,
    /// Risk exponent of the nearest-neighbor bound under that schedule.
    pub knn_exponent: f64,
    /// Whether nearest neighbors attain the minimax exponent (k ≥ 2).
    pub knn_optimal: bool,
}

impl MinimaxRate {
    pub fn bandwidth(&self, n: usize) -> f64 {
        (n as f64).powf(self.bandwidth_exponent)
    }

    pub fn neighbors(&self, n: usize) -> f64 {
        (n as f64).powf(self.neighbors_exponent)
    }
}

pub fn minimax_rate(params: &ClassParams) -> Result<MinimaxRate> {
    params.validate()?;
    let (h, k) = (params.h, params.k as f64);
    let (neighbors_exponent, knn_exponent) =
        if params.k == 1 { (h / (h + 1.0), -h / (2.0 * h + 2.0)) } else { (h / (h + k / 2.0), -h / (2.0 * h + k)) };
    Ok(MinimaxRate {
        exponent: -h / (2.0 * h + k),
        bandwidth_exponent: -1.0 / (2.0 * h + k),
        neighbors_exponent,
        knn_exponent,
        knn_optimal: params.k >= 2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(k: usize) -> ClassParams {
        ClassParams::new(1.0, 1.0, 1.0, k).unwrap()
    }

    #[test]
    fn knn_example() {
        let b = knn_bound(&unit(1), 10_000, 100, None).unwrap();
        assert!((b.approximation - 8f64.sqrt() * 0.1).abs() < 1e-15);
        assert!((b.estimation - 0.1).abs() < 1e-15);
        assert!((b.total - 0.382_842_712_474_619).abs() < 1e-12);
        let full = knn_bound(&unit(1), 400, 400, None).unwrap();
        assert!((full.total - (8f64.sqrt() + 0.05)).abs() < 1e-14);
        assert!(knn_bound(&unit(2), 100, 10, None).is_err());
        assert!(knn_bound(&unit(2), 100, 10, Some(3.0)).is_ok());
        assert!(knn_bound(&unit(1), 100, 101, None).is_err());
    }

    #[test]
    fn kernel_example_terms() {
        let n = 10_000usize;
        let h = (n as f64).powf(-1.0 / 3.0);
        let b = kernel_bound(&unit(1), n, h, None).unwrap();
        let nh = n as f64 * h;
        assert!((b.approximation - (h + 1.0 / nh)).abs() < 1e-15);
        assert!((b.estimation - 2.0001f64.sqrt() / nh.sqrt()).abs() < 1e-15);
        assert!((h - 0.046_415_888_336_127_8).abs() < 1e-15);
        assert_eq!(unit(1).covering_constant(), 1.0);
        assert_eq!(unit(2).covering_constant(), 2.0);
        let over = kernel_bound(&unit(1), n, h, Some(4.0)).unwrap();
        assert!(over.total > b.total);
    }

    #[test]
    fn kernel_bound_is_unimodal_in_h() {
        for k in 1..=3 {
            let vals: Vec<f64> = (1..400)
                .map(|i| kernel_bound(&unit(k), 5_000, i as f64 / 400.0, None).unwrap().total)
                .collect();
            let argmin = vals.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
            assert!(vals[..=argmin].windows(2).all(|w| w[1] <= w[0]));
            assert!(vals[argmin..].windows(2).all(|w| w[1] >= w[0]));
            assert!(argmin > 0 && argmin < vals.len() - 1);
        }
    }

    #[test]
    fn minimax_examples() {
        assert!((minimax_rate(&unit(1)).unwrap().exponent + 1.0 / 3.0).abs() < 1e-15);
        assert!((minimax_rate(&unit(2)).unwrap().exponent + 0.25).abs() < 1e-15);
        let half = ClassParams::new(0.5, 1.0, 1.0, 1).unwrap();
        assert!((minimax_rate(&half).unwrap().exponent + 0.25).abs() < 1e-15);
        let r1 = minimax_rate(&unit(1)).unwrap();
        assert!(!r1.knn_optimal);
        assert!((r1.knn_exponent + 0.25).abs() < 1e-15);
        assert!((r1.neighbors_exponent - 0.5).abs() < 1e-15);
        let r2 = minimax_rate(&unit(2)).unwrap();
        assert!(r2.knn_optimal && (r2.neighbors_exponent - 0.5).abs() < 1e-15);
        assert!(ClassParams::new(1.5, 1.0, 1.0, 1).is_err());
    }

    #[test]
    fn knn_bound_minimized_near_schedule() {
        // k = 2: the minimizer of (κ/n)^{1/2}·c + κ^{-1/2} scales like n^{1/2}
        let p = unit(2);
        let argmin = |n: usize| {
            (1..=n).min_by(|&a, &b| {
                let fa = knn_bound(&p, n, a, Some(1.0)).unwrap().total;
                let fb = knn_bound(&p, n, b, Some(1.0)).unwrap().total;
                fa.total_cmp(&fb)
            })
        };
        let (a, b) = (argmin(1 << 10).unwrap() as f64, argmin(1 << 14).unwrap() as f64);
        let slope = (b / a).ln() / 16f64.ln();
        assert!((slope - 0.5).abs() < 0.05, "{slope}");
    }
}
