//! The weighted empirical distribution estimator.

use crate::error::{Error, Result};
use crate::measures::{make_discrete, DiscreteDistribution, Points};
use crate::weights::{SortedIndex, WeightScheme, WeightVector};

/// A sample (X_i, Y_i), i = 1..n, with X_i ∈ R^k and Y_i ∈ R^d.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    covariates: Points,
    responses: Points,
}

impl Dataset {
    pub fn new(covariates: Points, responses: Points) -> Result<Self> {
        if covariates.is_empty() {
            return Err(Error::EmptySample);
        }
        if covariates.len() != responses.len() {
            return Err(Error::LengthMismatch {
                what: "covariates and responses",
                left: covariates.len(),
                right: responses.len(),
            });
        }
        Ok(Self { covariates, responses })
    }

    pub fn n(&self) -> usize {
        self.covariates.len()
    }

    /// Covariate dimension.
    pub fn k(&self) -> usize {
        self.covariates.dim()
    }

    /// Response dimension.
    pub fn d(&self) -> usize {
        self.responses.dim()
    }

    pub fn covariates(&self) -> &Points {
        &self.covariates
    }

    pub fn responses(&self) -> &Points {
        &self.responses
    }

    /// Whether every covariate lies in [0, 1]^k.
    pub fn in_unit_cube(&self) -> bool {
        self.covariates.coords().iter().all(|&v| (0.0..=1.0).contains(&v))
    }
}

/// A dataset bound to a weight scheme. Immutable; safe to share across threads.
#[derive(Debug, Clone)]
pub struct FittedRegressor<'a> {
    data: &'a Dataset,
    scheme: WeightScheme,
    index: Option<SortedIndex>,
}

/// Bind `scheme` to `data`. One-dimensional covariates get a sorted index,
/// which changes speed only.
pub fn fit(data: &Dataset, scheme: WeightScheme) -> Result<FittedRegressor<'_>> {
    scheme.validate_for(data.n())?;
    let index = if data.k() == 1 { Some(SortedIndex::new(data.covariates())?) } else { None };
    Ok(FittedRegressor { data, scheme, index })
}

impl<'a> FittedRegressor<'a> {
    /// Same as [`fit`] but always uses the linear scan.
    pub fn unindexed(data: &'a Dataset, scheme: WeightScheme) -> Result<Self> {
        scheme.validate_for(data.n())?;
        Ok(Self { data, scheme, index: None })
    }

    pub fn dataset(&self) -> &'a Dataset {
        self.data
    }

    pub fn scheme(&self) -> &WeightScheme {
        &self.scheme
    }

    pub fn weights(&self, x: &[f64]) -> Result<WeightVector> {
        match &self.index {
            Some(ix) => ix.weights(&self.scheme, x),
            None => self.scheme.weights(self.data.covariates(), x),
        }
    }

    /// F̂_x = Σ W_i(x) δ_{Y_i}, zero-weight responses dropped.
    pub fn predict_distribution(&self, x: &[f64]) -> Result<DiscreteDistribution> {
        let w = self.weights(x)?;
        distribution_from_weights(self.data.responses(), &w)
    }

    /// Σ W_i(x) Y_i.
    pub fn predict_mean(&self, x: &[f64]) -> Result<Vec<f64>> {
        let w = self.weights(x)?;
        let d = self.data.d();
        let mut m = vec![0.0; d];
        for (wi, yi) in w.values.iter().zip(self.data.responses().rows()) {
            if *wi > 0.0 {
                for (mj, yj) in m.iter_mut().zip(yi) {
                    *mj += wi * yj;
                }
            }
        }
        Ok(m)
    }
}

/// Weighted empirical distribution of `responses` under `w`.
pub fn distribution_from_weights(responses: &Points, w: &WeightVector) -> Result<DiscreteDistribution> {
    if w.len() != responses.len() {
        return Err(Error::LengthMismatch { what: "weights and responses", left: w.len(), right: responses.len() });
    }
    let support = w.support();
    let values = support.iter().map(|&i| w.values[i]).collect();
    make_discrete(responses.select(&support), values)
}
