//! Beta-binomial model for a single profile type.
//!
//! `Θ ~ Beta(α, β)` is the population frequency of the crime-stain type, the
//! database contributes `b` matches out of `N`, and the suspect is one more
//! Bernoulli success. The likelihood ratio for the crime stain is the
//! reciprocal of the posterior mean of `Θ` given the database and the suspect.
//!
//! The ratios are field expressions, so the `*_ratio` functions work over
//! exact rationals as well as floats; the `lr_*` functions wrap them into
//! [`LrResult`]s.

use serde::{Deserialize, Serialize};

use crate::error::{LrError, Result};
use crate::result::{LrResult, Method, ModelTag};
use crate::scalar::{Field, Real};

/// Beta prior hyperparameters, both strictly positive and finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaParams<T> {
    alpha: T,
    beta: T,
}

impl<T: Field> BetaParams<T> {
    pub fn new(alpha: T, beta: T) -> Result<Self> {
        let valid = |x: &T| *x > T::zero() && x.to_f64_lossy().is_finite();
        if !valid(&alpha) {
            return Err(LrError::invalid("alpha", "> 0", format!("{alpha:?}")));
        }
        if !valid(&beta) {
            return Err(LrError::invalid("beta", "> 0", format!("{beta:?}")));
        }
        Ok(Self { alpha, beta })
    }

    /// The uniform prior `Beta(1, 1)`.
    pub fn uniform() -> Self {
        Self {
            alpha: T::one(),
            beta: T::one(),
        }
    }

    pub fn alpha(&self) -> &T {
        &self.alpha
    }

    pub fn beta(&self) -> &T {
        &self.beta
    }

    pub fn mean(&self) -> T {
        self.alpha.clone() / (self.alpha.clone() + self.beta.clone())
    }

    /// `E(Θ²) = α (α + 1) / ((α + β)(α + β + 1))`.
    pub fn second_moment(&self) -> T {
        let total = self.alpha.clone() + self.beta.clone();
        self.alpha.clone() * (self.alpha.clone() + T::one()) / (total.clone() * (total + T::one()))
    }
}

/// Database summary: `b` copies of the matching type among `n_db` profiles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinomialData {
    n_db: u64,
    b: u64,
}

impl BinomialData {
    pub fn new(n_db: u64, b: u64) -> Result<Self> {
        if b > n_db {
            return Err(LrError::invalid("count", "<= db-size", b));
        }
        Ok(Self { n_db, b })
    }

    /// The rare type match: the suspect's type is absent from the database.
    pub fn rare_match(n_db: u64) -> Self {
        Self { n_db, b: 0 }
    }

    pub fn n_db(&self) -> u64 {
        self.n_db
    }

    pub fn b(&self) -> u64 {
        self.b
    }
}

/// Conjugate update: `Beta(α + b + s, β + N - b)` with `s = 1` when the
/// suspect's profile is included.
pub fn posterior<T: Field>(prior: &BetaParams<T>, data: &BinomialData, include_suspect: bool) -> BetaParams<T> {
    let successes = data.b + u64::from(include_suspect);
    BetaParams {
        alpha: prior.alpha.clone() + T::from_count(successes),
        beta: prior.beta.clone() + T::from_count(data.n_db - data.b),
    }
}

/// `(α + β + N + 1) / (α + b + 1)`.
pub fn full_ratio<T: Field>(prior: &BetaParams<T>, data: &BinomialData) -> T {
    let (a, b) = (prior.alpha.clone(), prior.beta.clone());
    (a.clone() + b + T::from_count(data.n_db + 1)) / (a + T::from_count(data.b + 1))
}

/// `(α + β + N) / (α + b)`: the reciprocal of the posterior mean of `Θ`
/// given the database alone.
pub fn plugin_ratio<T: Field>(prior: &BetaParams<T>, data: &BinomialData) -> T {
    let (a, b) = (prior.alpha.clone(), prior.beta.clone());
    (a.clone() + b + T::from_count(data.n_db)) / (a + T::from_count(data.b))
}

/// `E(Θ | b) / E(Θ² | b)` from the moments of `Beta(α + b, β + N - b)`.
pub fn joint_ratio<T: Field>(prior: &BetaParams<T>, data: &BinomialData) -> T {
    let post = posterior(prior, data, false);
    post.mean() / post.second_moment()
}

/// Update on database and suspect first, then take `1 / E**(Θ)`.
pub fn two_step_ratio<T: Field>(prior: &BetaParams<T>, data: &BinomialData) -> T {
    T::one() / posterior(prior, data, true).mean()
}

fn wrap<T: Real>(value: T, method: Method) -> LrResult<T> {
    LrResult::from_value(value, method, ModelTag::BetaBinomial)
}

pub fn lr_full<T: Real>(prior: &BetaParams<T>, data: &BinomialData) -> LrResult<T> {
    wrap(full_ratio(prior, data), Method::FullBayes)
}

pub fn lr_plugin<T: Real>(prior: &BetaParams<T>, data: &BinomialData) -> LrResult<T> {
    wrap(plugin_ratio(prior, data), Method::Plugin)
}

pub fn lr_joint<T: Real>(prior: &BetaParams<T>, data: &BinomialData) -> LrResult<T> {
    wrap(joint_ratio(prior, data), Method::FullBayes)
}

pub fn lr_two_step<T: Real>(prior: &BetaParams<T>, data: &BinomialData) -> LrResult<T> {
    wrap(two_step_ratio(prior, data), Method::FullBayes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use num_bigint::BigInt;
    use num_rational::BigRational;
    use proptest::prelude::*;

    fn beta(a: f64, b: f64) -> BetaParams<f64> {
        BetaParams::new(a, b).unwrap()
    }

    fn data(n: u64, b: u64) -> BinomialData {
        BinomialData::new(n, b).unwrap()
    }

    fn rational(num: i64, den: i64) -> BigRational {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    #[test]
    fn posterior_updates() {
        assert_eq!(posterior(&beta(1.0, 1.0), &data(100, 0), true), beta(2.0, 101.0));
        assert_eq!(posterior(&beta(0.3, 4.0), &data(0, 0), false), beta(0.3, 4.0));
        assert_eq!(posterior(&beta(2.0, 3.0), &data(10, 4), true), beta(7.0, 9.0));
    }

    #[test]
    fn closed_form_values() {
        assert_eq!(lr_full(&beta(1.0, 1.0), &data(100, 0)).lr, 51.5);
        assert_eq!(lr_full(&beta(1.0, 1.0), &data(0, 0)).lr, 1.5);
        assert_eq!(lr_full(&beta(1.0, 5.0), &data(100, 0)).lr, 53.5);

        assert_eq!(lr_plugin(&beta(1.0, 1.0), &data(100, 0)).lr, 102.0);
        assert_eq!(lr_plugin(&beta(1.0, 1.0), &data(0, 0)).lr, 2.0);
        assert_eq!(lr_plugin(&beta(1.0, 5.0), &data(100, 0)).lr, 106.0);

        assert_relative_eq!(lr_joint(&beta(1.0, 1.0), &data(100, 0)).lr, 51.5, max_relative = 1e-14);
        assert_relative_eq!(lr_joint(&beta(1.0, 1.0), &data(0, 0)).lr, 1.5, max_relative = 1e-14);

        assert_relative_eq!(lr_two_step(&beta(1.0, 1.0), &data(100, 0)).lr, 51.5, max_relative = 1e-14);
        assert_relative_eq!(lr_two_step(&beta(1.0, 1.0), &data(100, 5)).lr, 103.0 / 7.0, max_relative = 1e-14);
        let (a, b) = (0.7, 3.2);
        assert_relative_eq!(
            lr_two_step(&beta(a, b), &data(0, 0)).lr,
            (a + b + 1.0) / (a + 1.0),
            max_relative = 1e-14
        );
    }

    #[test]
    fn result_metadata() {
        let r = lr_plugin(&beta(1.0, 1.0), &data(100, 0));
        assert_eq!(r.method, Method::Plugin);
        assert_eq!(r.model, ModelTag::BetaBinomial);
        assert_relative_eq!(r.log10_lr, 102f64.log10(), max_relative = 1e-15);
        assert!(r.diagnostics.is_none());
    }

    #[test]
    fn rejects_invalid_hyperparameters() {
        let err = BetaParams::new(0.0, 1.0).unwrap_err();
        assert!(err.to_string().starts_with("alpha must be > 0"), "{err}");
        assert!(BetaParams::new(1.0, -2.0).is_err());
        assert!(BetaParams::new(f64::NAN, 1.0).is_err());
        assert!(BetaParams::new(1.0, f64::INFINITY).is_err());
        assert!(BinomialData::new(3, 4).is_err());
        assert!(BetaParams::new(rational(0, 1), rational(1, 1)).is_err());
    }

    #[test]
    fn exact_rational_identities() {
        let prior = BetaParams::new(rational(1, 3), rational(17, 2)).unwrap();
        let d = data(41, 6);
        let full = full_ratio(&prior, &d);
        assert_eq!(full, joint_ratio(&prior, &d));
        assert_eq!(full, two_step_ratio(&prior, &d));
        // (1/3 + 17/2 + 42) / (1/3 + 7) = (305/6) / (22/3)
        assert_eq!(full, rational(305, 44));
        assert!(plugin_ratio(&prior, &d) > full);
    }

    #[test]
    fn f32_scalar() {
        let r = lr_full(&BetaParams::new(1.0_f32, 1.0).unwrap(), &data(100, 0));
        assert_eq!(r.lr, 51.5_f32);
    }

    #[test]
    fn decreasing_in_alpha() {
        let d = data(100, 0);
        let alphas: Vec<f64> = (1..200).map(|i| i as f64 * 0.1).collect();
        for w in alphas.windows(2) {
            assert!(lr_full(&beta(w[1], 5.0), &d).lr < lr_full(&beta(w[0], 5.0), &d).lr);
            assert!(lr_plugin(&beta(w[1], 5.0), &d).lr < lr_plugin(&beta(w[0], 5.0), &d).lr);
        }
    }

    #[test]
    fn small_alpha_asymptotes() {
        let (b, n) = (10.0, 100u64);
        let d = data(n, 0);
        let target = (1.0 + b + n as f64).log10();
        let mut previous_gap = f64::INFINITY;
        for alpha in [1e-2, 1e-4, 1e-6, 1e-8] {
            let full = lr_full(&beta(alpha, b), &d).log10_lr;
            let plugin = lr_plugin(&beta(alpha, b), &d).log10_lr;
            let gap = (full - target).abs();
            assert!(gap < previous_gap);
            previous_gap = gap;
            // log10 plugin - log10 full grows like log10(1/alpha)
            let residual = plugin - full - (1.0 / alpha).log10();
            assert!(residual.abs() < 0.01, "alpha {alpha}: residual {residual}");
        }
        assert!(previous_gap < 1e-8);
    }

    proptest! {
        #[test]
        fn plugin_is_anti_conservative(
            alpha in 1e-3f64..100.0,
            beta_ in 1e-3f64..100.0,
            n in 0u64..1_000_000,
            frac in 0.0f64..=1.0,
        ) {
            let b = ((n as f64) * frac).floor() as u64;
            let d = data(n, b.min(n));
            let prior = BetaParams::new(alpha, beta_).unwrap();
            prop_assert!(lr_plugin(&prior, &d).lr > lr_full(&prior, &d).lr);
        }

        #[test]
        fn formulations_agree(
            alpha in 1e-2f64..50.0,
            beta_ in 1e-2f64..50.0,
            n in 0u64..10_000,
            frac in 0.0f64..=1.0,
        ) {
            let b = ((n as f64) * frac).floor() as u64;
            let d = data(n, b.min(n));
            let prior = BetaParams::new(alpha, beta_).unwrap();
            let full = lr_full(&prior, &d).lr;
            prop_assert!(((lr_joint(&prior, &d).lr - full) / full).abs() < 1e-12);
            prop_assert!(((lr_two_step(&prior, &d).lr - full) / full).abs() < 1e-12);
        }

        #[test]
        fn rational_formulations_identical(
            an in 1i64..200, ad in 1i64..50,
            bn in 1i64..200, bd in 1i64..50,
            n in 0u64..500, b in 0u64..500,
        ) {
            let d = data(n, b.min(n));
            let prior = BetaParams::new(rational(an, ad), rational(bn, bd)).unwrap();
            let full = full_ratio(&prior, &d);
            prop_assert_eq!(&full, &joint_ratio(&prior, &d));
            prop_assert_eq!(&full, &two_step_ratio(&prior, &d));
        }
    }
}
