//! Monte-Carlo risk curves, rate fits and bound comparisons.
//!
//! Replication r at grid index j draws its training sample from stream
//! `(seed, j, r, 0)` and its test covariates from `(seed, j, r, 1)`. Tasks run
//! in parallel and are reduced in index order, so reports are bitwise
//! reproducible for a given plan.

use rayon::prelude::*;
use serde::Serialize;

use crate::bounds::{kernel_bound, knn_bound, minimax_rate, proposition_bound_empirical};
use crate::error::{invalid, Result};
use crate::functionals::FunctionalSpec;
use crate::measures::DiscreteDistribution;
use crate::ot::wp_to_law;
use crate::regressor::{fit, FittedRegressor};
use crate::rng;
use crate::synth::SyntheticModel;
use crate::weights::{mean_se, SchemeRule};

pub const DEFAULT_TEST_POINTS: usize = 32;
pub const DEFAULT_SLOPE_TOLERANCE: f64 = 0.08;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentPlan {
    pub model: SyntheticModel,
    pub scheme: SchemeRule,
    /// Strictly increasing sample sizes.
    pub n_grid: Vec<usize>,
    pub replications: usize,
    pub test_points: usize,
    pub seed: u64,
    /// Risk is E[W_p^p(F̂_X, F_X)].
    pub order: f64,
    /// Nearest-neighbor constant needed by the k ≥ 2 bound.
    pub tilde_ck: Option<f64>,
    pub slope_tolerance: f64,
}

impl ExperimentPlan {
    pub fn new(model: SyntheticModel, scheme: SchemeRule, n_grid: Vec<usize>, replications: usize, seed: u64) -> Self {
        Self {
            model,
            scheme,
            n_grid,
            replications,
            test_points: DEFAULT_TEST_POINTS,
            seed,
            order: 1.0,
            tilde_ck: None,
            slope_tolerance: DEFAULT_SLOPE_TOLERANCE,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_grid.is_empty() || self.n_grid[0] == 0 {
            return Err(invalid("n grid must be nonempty with positive sizes"));
        }
        if self.n_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("n grid must be strictly increasing"));
        }
        if self.replications < 2 {
            return Err(invalid("at least two replications are needed for a standard error"));
        }
        if self.test_points == 0 {
            return Err(invalid("test_points must be positive"));
        }
        if !(self.order >= 1.0 && self.order.is_finite()) {
            return Err(invalid(format!("order must be ≥ 1, got {}", self.order)));
        }
        if !(self.slope_tolerance > 0.0) {
            return Err(invalid("slope tolerance must be positive"));
        }
        for &n in &self.n_grid {
            if !(self.scheme.parameter(n) > 0.0) {
                return Err(invalid(format!("schedule is not positive at n = {n}")));
            }
            self.scheme.at(n)?;
        }
        Ok(())
    }

    /// Theoretical W₁ risk exponent for the scheme family on this model's
    /// class; `None` for orders other than 1.
    pub fn expected_exponent(&self) -> Result<Option<f64>> {
        if self.order != 1.0 {
            return Ok(None);
        }
        let r = minimax_rate(&self.model.params)?;
        Ok(Some(if self.scheme.is_knn() { r.knn_exponent } else { r.exponent }))
    }
}

/// Monte-Carlo risk at one grid point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RiskRow {
    pub n: usize,
    /// Bandwidth or neighbor count used at this n.
    pub parameter: f64,
    pub mean: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateReport {
    pub model: String,
    pub rows: Vec<RiskRow>,
    pub slope: f64,
    pub slope_stderr: f64,
    pub intercept: f64,
    pub expected: Option<f64>,
    pub tolerance: f64,
    pub passed: Option<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundRow {
    pub n: usize,
    pub parameter: f64,
    pub risk_mean: f64,
    pub risk_stderr: f64,
    /// Conditional-on-covariates bound averaged like the risk.
    pub proposition_bound: f64,
    pub bound_approximation: f64,
    pub bound_estimation: f64,
    pub bound: f64,
    pub bound_to_risk: f64,
    /// mean − 3·stderr exceeds the closed-form bound.
    pub violated: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FunctionalRow {
    pub n: usize,
    pub functional: FunctionalSpec,
    pub mean_abs_error: f64,
    pub stderr: f64,
}

/// Least-squares line fit: (slope, slope standard error, intercept).
pub fn ols_slope(x: &[f64], y: &[f64]) -> Result<(f64, f64, f64)> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(invalid("slope fit needs at least two paired points"));
    }
    let m = x.len() as f64;
    let mx = x.iter().sum::<f64>() / m;
    let my = y.iter().sum::<f64>() / m;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    if sxx == 0.0 {
        return Err(invalid("slope fit needs distinct abscissae"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let se = if x.len() > 2 {
        let ssr: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
        (ssr / (m - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Ok((slope, se, intercept))
}

/// Whether each consecutive pair satisfies mean_{i+1} ≤ mean_i + pooled
/// standard error.
pub fn nonincreasing_within(means: &[f64], stderrs: &[f64]) -> bool {
    (1..means.len()).all(|i| means[i] <= means[i - 1] + stderrs[i].hypot(stderrs[i - 1]))
}

/// Whether the sequence is nonincreasing up to at most one rise, and that rise
/// stays within the pooled standard error.
pub fn decreasing_with_one_inversion(means: &[f64], stderrs: &[f64]) -> bool {
    let mut rises = 0;
    for i in 1..means.len() {
        if means[i] > means[i - 1] {
            rises += 1;
            if rises > 1 || means[i] - means[i - 1] > stderrs[i].hypot(stderrs[i - 1]) {
                return false;
            }
        }
    }
    true
}

struct Replicate {
    risk: f64,
    proposition: f64,
    functional_errors: Vec<f64>,
}

struct Extras<'a> {
    proposition: bool,
    functionals: &'a [FunctionalSpec],
}

fn loss(pred: &DiscreteDistribution, model: &SyntheticModel, x: &[f64], p: f64) -> Result<f64> {
    let truth = model.conditional_law(x)?;
    let pred = if pred.dim() > 1 { pred.compact()? } else { pred.clone() };
    let w = wp_to_law(&pred, &truth, p)?;
    Ok(if p == 1.0 { w } else { w.powf(p) })
}

fn replicate(plan: &ExperimentPlan, j: usize, r: usize, extras: &Extras<'_>) -> Result<Replicate> {
    let n = plan.n_grid[j];
    let model = &plan.model;
    let data = model.sample_with(n, &mut rng::stream(plan.seed, &[j as u64, r as u64, 0]))?;
    let tests = model.sample_covariates(plan.test_points, &mut rng::stream(plan.seed, &[j as u64, r as u64, 1]))?;
    let est: FittedRegressor<'_> = fit(&data, plan.scheme.at(n)?)?;
    let mut risk = 0.0;
    let mut prop = 0.0;
    let mut ferr = vec![0.0; extras.functionals.len()];
    for x in tests.rows() {
        let pred = est.predict_distribution(x)?;
        risk += loss(&pred, model, x, plan.order)?;
        if extras.proposition {
            prop += proposition_bound_empirical(&est, model, x)?.total;
        }
        if !extras.functionals.is_empty() {
            let truth = model.conditional_law(x)?;
            for (e, spec) in ferr.iter_mut().zip(extras.functionals) {
                *e += (spec.eval(&pred)? - spec.eval_law(&truth)?).abs();
            }
        }
    }
    let t = plan.test_points as f64;
    ferr.iter_mut().for_each(|e| *e /= t);
    Ok(Replicate { risk: risk / t, proposition: prop / t, functional_errors: ferr })
}

/// All replications, grouped by grid index.
fn run_grid(plan: &ExperimentPlan, extras: &Extras<'_>) -> Result<Vec<Vec<Replicate>>> {
    plan.validate()?;
    let r_count = plan.replications;
    let flat: Vec<Replicate> = (0..plan.n_grid.len() * r_count)
        .into_par_iter()
        .map(|task| replicate(plan, task / r_count, task % r_count, extras))
        .collect::<Result<_>>()?;
    let mut grouped = Vec::with_capacity(plan.n_grid.len());
    let mut it = flat.into_iter();
    for _ in 0..plan.n_grid.len() {
        grouped.push(it.by_ref().take(r_count).collect());
    }
    Ok(grouped)
}

fn risk_rows(plan: &ExperimentPlan, grid: &[Vec<Replicate>]) -> Vec<RiskRow> {
    plan.n_grid
        .iter()
        .zip(grid)
        .map(|(&n, reps)| {
            let (mean, stderr) = mean_se(reps.iter().map(|r| r.risk));
            RiskRow { n, parameter: plan.scheme.parameter(n), mean, stderr }
        })
        .collect()
}

/// Risk mean and standard error at grid index `j`.
pub fn risk_estimate(plan: &ExperimentPlan, j: usize) -> Result<RiskRow> {
    if j >= plan.n_grid.len() {
        return Err(invalid(format!("grid index {j} out of range")));
    }
    let single = ExperimentPlan { n_grid: vec![plan.n_grid[j]], ..plan.clone() };
    single.validate()?;
    let extras = Extras { proposition: false, functionals: &[] };
    let reps: Vec<Replicate> = (0..plan.replications)
        .into_par_iter()
        .map(|r| replicate(plan, j, r, &extras))
        .collect::<Result<_>>()?;
    let (mean, stderr) = mean_se(reps.iter().map(|r| r.risk));
    let n = plan.n_grid[j];
    Ok(RiskRow { n, parameter: plan.scheme.parameter(n), mean, stderr })
}

/// Risk curve over the grid plus a log-log slope compared with theory.
pub fn rate_study(plan: &ExperimentPlan) -> Result<RateReport> {
    let grid = run_grid(plan, &Extras { proposition: false, functionals: &[] })?;
    let rows = risk_rows(plan, &grid);
    rate_report(plan, rows)
}

fn rate_report(plan: &ExperimentPlan, rows: Vec<RiskRow>) -> Result<RateReport> {
    let x: Vec<f64> = rows.iter().map(|r| (r.n as f64).ln()).collect();
    let y: Vec<f64> = rows.iter().map(|r| r.mean.max(f64::MIN_POSITIVE).ln()).collect();
    let (slope, slope_stderr, intercept) = if rows.len() >= 2 { ols_slope(&x, &y)? } else { (f64::NAN, f64::NAN, f64::NAN) };
    let expected = plan.expected_exponent()?;
    let passed = expected.map(|e| slope.is_finite() && (slope - e).abs() <= plan.slope_tolerance);
    Ok(RateReport {
        model: plan.model.name.clone(),
        rows,
        slope,
        slope_stderr,
        intercept,
        expected,
        tolerance: plan.slope_tolerance,
        passed,
    })
}

/// Monte-Carlo risk against the closed-form kernel or nearest-neighbor bound
/// and the conditional-on-covariates bound, row by row.
pub fn bound_vs_risk(plan: &ExperimentPlan) -> Result<Vec<BoundRow>> {
    if plan.order != 1.0 {
        return Err(invalid("bounds are stated for W₁ risk; set order = 1"));
    }
    if plan.model.d() != 1 {
        return Err(invalid("bounds need one-dimensional responses"));
    }
    let params = plan.model.params;
    if plan.scheme.is_knn() && params.k >= 2 && plan.tilde_ck.is_none() {
        return Err(invalid("tilde_ck is required for nearest-neighbor bounds with k ≥ 2"));
    }
    let grid = run_grid(plan, &Extras { proposition: true, functionals: &[] })?;
    let rows = risk_rows(plan, &grid);
    rows.iter()
        .zip(&grid)
        .map(|(row, reps)| {
            let b = match plan.scheme {
                SchemeRule::Kernel { .. } => kernel_bound(&params, row.n, row.parameter, None)?,
                SchemeRule::Knn { .. } => knn_bound(&params, row.n, row.parameter as usize, plan.tilde_ck)?,
            };
            let prop = reps.iter().map(|r| r.proposition).sum::<f64>() / reps.len() as f64;
            Ok(BoundRow {
                n: row.n,
                parameter: row.parameter,
                risk_mean: row.mean,
                risk_stderr: row.stderr,
                proposition_bound: prop,
                bound_approximation: b.approximation,
                bound_estimation: b.estimation,
                bound: b.total,
                bound_to_risk: b.total / row.mean,
                violated: row.mean - 3.0 * row.stderr > b.total,
            })
        })
        .collect()
}

/// Mean absolute plug-in error |S(F̂_X) − S(F_X)| per functional along the grid.
pub fn functional_study(plan: &ExperimentPlan, specs: &[FunctionalSpec]) -> Result<Vec<FunctionalRow>> {
    for s in specs {
        s.validate()?;
        if s.response_dim() != plan.model.d() {
            return Err(invalid(format!("functional {s} does not apply to responses of dimension {}", plan.model.d())));
        }
    }
    let grid = run_grid(plan, &Extras { proposition: false, functionals: specs })?;
    let mut rows = Vec::new();
    for (&n, reps) in plan.n_grid.iter().zip(&grid) {
        for (i, spec) in specs.iter().enumerate() {
            let (m, se) = mean_se(reps.iter().map(|r| r.functional_errors[i]));
            rows.push(FunctionalRow { n, functional: *spec, mean_abs_error: m, stderr: se });
        }
    }
    Ok(rows)
}
