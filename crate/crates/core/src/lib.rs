//! Distributional regression with local probability weights.
//!
//! The conditional law of Y given X = x is estimated by the weighted empirical
//! distribution Σ W_i(x) δ_{Y_i}, where the weights come from a kernel or
//! nearest-neighbor scheme and depend on the covariates only. Errors are
//! measured in Wasserstein distance.
//!
//! | Module | Contents |
//! |--------|----------|
//! | [`measures`] | discrete distributions, CDF / quantile views, analytic laws |
//! | [`ot`] | exact 1-D W_p, transportation simplex, sliced and max-sliced W_p |
//! | [`weights`] | kernel and k-NN weight schemes, Stone-condition diagnostics |
//! | [`regressor`] | fit / predict of the weighted empirical distribution |
//! | [`functionals`] | plug-in quantile, tail expectation, PWM, covariance |
//! | [`bounds`] | closed-form risk bounds and minimax schedules |
//! | [`synth`] | synthetic models with known conditional laws |
//! | [`experiments`] | Monte-Carlo risk curves, rate fits, bound checks |

// `!(x > 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod error;
pub mod experiments;
pub mod functionals;
pub mod measures;
pub mod ot;
pub mod quad;
pub mod regressor;
pub mod rng;
pub mod special;
pub mod synth;
pub mod weights;

pub use error::{Error, Result};
pub use measures::{make_discrete, AnalyticDistribution1D, ConditionalLaw, DiscreteDistribution, Points};
pub use regressor::{fit, Dataset, FittedRegressor};
pub use weights::{KernelKind, KernelScheme, KnnScheme, WeightScheme, WeightVector};
