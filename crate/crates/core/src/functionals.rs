//! Plug-in conditional functionals S(F̂_x).

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::measures::{AnalyticDistribution1D, ConditionalLaw, DiscreteDistribution};
use crate::quad;
use crate::regressor::FittedRegressor;
use crate::special::beta_inc;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum FunctionalSpec {
    /// Generalized inverse G⁻¹(α).
    Quantile(f64),
    /// (1/(1−α)) ∫_α^1 G⁻¹(u) du.
    TailExpectation(f64),
    /// ∫_0^1 G⁻¹(u) u^p (1−u)^q du.
    Pwm { p: f64, q: f64 },
    /// Covariance of the two components of a law on R².
    Covariance,
}

fn check_level(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::OutOfRange { value: alpha, range: "(0, 1)" })
    }
}

fn check_pwm(p: f64, q: f64) -> Result<()> {
    if p >= 0.0 && q >= 0.0 && p.is_finite() && q.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("pwm orders must be nonnegative, got ({p}, {q})")))
    }
}

impl FunctionalSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            FunctionalSpec::Quantile(a) | FunctionalSpec::TailExpectation(a) => check_level(a),
            FunctionalSpec::Pwm { p, q } => check_pwm(p, q),
            FunctionalSpec::Covariance => Ok(()),
        }
    }

    /// Response dimension the functional applies to.
    pub fn response_dim(&self) -> usize {
        match self {
            FunctionalSpec::Covariance => 2,
            _ => 1,
        }
    }

    /// Lipschitz constant with respect to W₁ (W₂ for covariance, where the
    /// constant depends on the pair and is not returned).
    pub fn lipschitz_w1(&self) -> Option<f64> {
        match *self {
            FunctionalSpec::TailExpectation(a) => Some(1.0 / (1.0 - a)),
            FunctionalSpec::Pwm { p, q } => Some(pwm_lipschitz(p, q)),
            _ => None,
        }
    }

    /// Apply the functional to a discrete distribution.
    pub fn eval(&self, dist: &DiscreteDistribution) -> Result<f64> {
        match *self {
            FunctionalSpec::Quantile(a) => quantile_functional(dist, a),
            FunctionalSpec::TailExpectation(a) => tail_expectation(dist, a),
            FunctionalSpec::Pwm { p, q } => pwm(dist, p, q),
            FunctionalSpec::Covariance => covariance_functional(dist),
        }
    }

    /// Apply the functional to a conditional law of either representation.
    pub fn eval_law(&self, law: &ConditionalLaw) -> Result<f64> {
        match law {
            ConditionalLaw::Discrete(d) => self.eval(d),
            other => {
                let a = other.as_analytic().expect("analytic");
                match *self {
                    FunctionalSpec::Quantile(al) => {
                        check_level(al)?;
                        Ok(a.quantile(al))
                    }
                    FunctionalSpec::TailExpectation(al) => tail_expectation_analytic(a, al),
                    FunctionalSpec::Pwm { p, q } => pwm_analytic(a, p, q),
                    FunctionalSpec::Covariance => Err(Error::DimensionMismatch { expected: 2, got: 1 }),
                }
            }
        }
    }
}

impl fmt::Display for FunctionalSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FunctionalSpec::Quantile(a) => write!(f, "quantile:{a}"),
            FunctionalSpec::TailExpectation(a) => write!(f, "cte:{a}"),
            FunctionalSpec::Pwm { p, q } => write!(f, "pwm:{p}:{q}"),
            FunctionalSpec::Covariance => write!(f, "cov"),
        }
    }
}

impl FromStr for FunctionalSpec {
    type Err = Error;

    /// Accepts `quantile:α`, `cte:α`, `pwm:p:q` and `cov`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        let num = |t: &str| t.trim().parse::<f64>().map_err(|_| invalid(format!("bad number '{t}' in '{s}'")));
        let spec = match parts.as_slice() {
            ["quantile", a] => FunctionalSpec::Quantile(num(a)?),
            ["cte", a] => FunctionalSpec::TailExpectation(num(a)?),
            ["pwm", p, q] => FunctionalSpec::Pwm { p: num(p)?, q: num(q)? },
            ["cov"] => FunctionalSpec::Covariance,
            _ => return Err(invalid(format!("unknown functional '{s}'"))),
        };
        spec.validate()?;
        Ok(spec)
    }
}

pub fn quantile_functional(dist: &DiscreteDistribution, alpha: f64) -> Result<f64> {
    check_level(alpha)?;
    dist.quantile(alpha)
}

/// Exact tail expectation: each cumulative-weight segment contributes its
/// atom times the length of its overlap with [α, 1].
pub fn tail_expectation(dist: &DiscreteDistribution, alpha: f64) -> Result<f64> {
    check_level(alpha)?;
    let vals = dist.sorted_atoms()?;
    let cum = dist.cumulative()?;
    let mut acc = 0.0;
    let mut lo = 0.0f64;
    for (&y, &hi) in vals.iter().zip(cum) {
        let len = hi - lo.max(alpha);
        if len > 0.0 {
            acc += y * len;
        }
        lo = hi;
    }
    Ok(acc / (1.0 - alpha))
}

/// max_u u^p (1−u)^q, with 0^0 = 1.
pub fn pwm_lipschitz(p: f64, q: f64) -> f64 {
    if p + q == 0.0 {
        return 1.0;
    }
    let s = p + q;
    (p / s).powf(p) * (q / s).powf(q)
}

/// Exact probability weighted moment Σ y_(i) [B(c_i) − B(c_{i−1})] with
/// B(c) = ∫_0^c u^p (1−u)^q du.
pub fn pwm(dist: &DiscreteDistribution, p: f64, q: f64) -> Result<f64> {
    check_pwm(p, q)?;
    let vals = dist.sorted_atoms()?;
    let cum = dist.cumulative()?;
    let mut acc = 0.0;
    let mut prev = 0.0;
    for (&y, &c) in vals.iter().zip(cum) {
        let b = beta_inc(p + 1.0, q + 1.0, c)?;
        acc += y * (b - prev);
        prev = b;
    }
    Ok(acc)
}

/// Σ w y₁y₂ − (Σ w y₁)(Σ w y₂).
pub fn covariance_functional(dist: &DiscreteDistribution) -> Result<f64> {
    if dist.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: dist.dim() });
    }
    let (mut s1, mut s2, mut s12) = (0.0, 0.0, 0.0);
    for (w, y) in dist.weights().iter().zip(dist.atoms().rows()) {
        s1 += w * y[0];
        s2 += w * y[1];
        s12 += w * y[0] * y[1];
    }
    Ok(s12 - s1 * s2)
}

pub fn tail_expectation_analytic(law: &dyn AnalyticDistribution1D, alpha: f64) -> Result<f64> {
    check_level(alpha)?;
    Ok(law.quantile_integral(alpha, 1.0)? / (1.0 - alpha))
}

/// PWM of a continuous law by adaptive quadrature of F⁻¹(u) u^p (1−u)^q.
pub fn pwm_analytic(law: &dyn AnalyticDistribution1D, p: f64, q: f64) -> Result<f64> {
    check_pwm(p, q)?;
    quad::integrate(|u| law.quantile(u) * u.powf(p) * (1.0 - u).powf(q), 0.0, 1.0, 1e-11)
}

/// S(F̂_x) for the fitted estimator.
pub fn conditional_functional(model: &FittedRegressor<'_>, spec: &FunctionalSpec, x: &[f64]) -> Result<f64> {
    spec.validate()?;
    let d = model.dataset().d();
    if d != spec.response_dim() {
        return Err(Error::DimensionMismatch { expected: spec.response_dim(), got: d });
    }
    spec.eval(&model.predict_distribution(x)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{make_discrete, Points, UniformLaw};
    use crate::special::ln_beta;

    fn d1(a: &[f64], w: &[f64]) -> DiscreteDistribution {
        DiscreteDistribution::from_1d(a, w).unwrap()
    }

    #[test]
    fn quantile_and_tail_examples() {
        let g = d1(&[1.0, 3.0], &[0.25, 0.75]);
        assert_eq!(quantile_functional(&g, 0.9).unwrap(), 3.0);
        let dirac = d1(&[-2.5], &[1.0]);
        for a in [0.01, 0.5, 0.99] {
            assert_eq!(quantile_functional(&dirac, a).unwrap(), -2.5);
            assert!((tail_expectation(&dirac, a).unwrap() + 2.5).abs() < 1e-12);
        }
        // (0.25·1 + 0.75·3) restricted to [0.5, 1] → 3
        assert!((tail_expectation(&g, 0.5).unwrap() - 3.0).abs() < 1e-15);
        // α below the first breakpoint: (0.15·1 + 0.75·3) / 0.9
        assert!((tail_expectation(&g, 0.1).unwrap() - (0.15 + 2.25) / 0.9).abs() < 1e-14);
        let small = tail_expectation(&g, 1e-6).unwrap();
        assert!((small - 2.5).abs() < 1e-4);
        assert!(quantile_functional(&g, 1.0).is_err());
        assert!(tail_expectation(&g, 0.0).is_err());
    }

    #[test]
    fn uniform_references() {
        let u = UniformLaw::new(0.0, 1.0).unwrap();
        assert!((tail_expectation_analytic(&u, 0.9).unwrap() - 0.95).abs() < 1e-14);
        assert!((pwm_analytic(&u, 1.0, 1.0).unwrap() - 1.0 / 12.0).abs() < 1e-12);
    }

    #[test]
    fn pwm_on_diracs_and_mean_identity() {
        for (p, q) in [(1.0, 1.0), (2.0, 3.0), (0.5, 0.25)] {
            let got = pwm(&d1(&[1.7], &[1.0]), p, q).unwrap();
            let want = 1.7 * ln_beta(p + 1.0, q + 1.0).exp();
            assert!((got - want).abs() < 1e-12 * want.abs(), "{got} vs {want}");
        }
        let g = d1(&[-1.0, 0.5, 2.0, 4.0], &[0.1, 0.4, 0.3, 0.2]);
        let sum = pwm(&g, 1.0, 0.0).unwrap() + pwm(&g, 0.0, 1.0).unwrap();
        assert!((sum - g.mean()[0]).abs() < 1e-12);
        assert!((pwm(&g, 0.0, 0.0).unwrap() - g.mean()[0]).abs() < 1e-12);
    }

    #[test]
    fn lipschitz_constants() {
        assert_eq!(pwm_lipschitz(1.0, 1.0), 0.25);
        assert!((pwm_lipschitz(2.0, 3.0) - 0.4f64.powi(2) * 0.6f64.powi(3)).abs() < 1e-15);
        assert_eq!(FunctionalSpec::TailExpectation(0.9).lipschitz_w1(), Some(1.0 / (1.0 - 0.9)));
    }

    #[test]
    fn covariance_examples() {
        let two = make_discrete(Points::from_rows(&[[0.0, 0.0], [1.0, 1.0]]).unwrap(), vec![0.5, 0.5]).unwrap();
        assert_eq!(covariance_functional(&two).unwrap(), 0.25);
        let dirac = DiscreteDistribution::dirac(&[3.0, -2.0]).unwrap();
        assert_eq!(covariance_functional(&dirac).unwrap(), 0.0);
        assert!(covariance_functional(&d1(&[0.0], &[1.0])).is_err());
    }

    #[test]
    fn parse_round_trip() {
        for s in ["quantile:0.5", "cte:0.9", "pwm:1:2", "cov"] {
            let spec: FunctionalSpec = s.parse().unwrap();
            assert_eq!(spec.to_string(), s);
        }
        assert!("quantile:1.5".parse::<FunctionalSpec>().is_err());
        assert!("pwm:1".parse::<FunctionalSpec>().is_err());
        assert!("median".parse::<FunctionalSpec>().is_err());
        assert!("pwm:-1:1".parse::<FunctionalSpec>().is_err());
    }
}
