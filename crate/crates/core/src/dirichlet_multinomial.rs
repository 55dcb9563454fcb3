//! Dirichlet-multinomial model with a random number of types.
//!
//! `K ~ p(k)` types exist among `m` possible profiles, which `k` of them is
//! uniform, and their frequencies are symmetric Dirichlet(1). For a rare type
//! match (suspect's type absent from a database of `N` profiles showing
//! `k_obs` distinct types) the likelihood ratio reduces to
//!
//! ```text
//! LR = ½ · Σ C(k, k_obs+1) Γ(k)/Γ(k+N+1) p(k)  /  Σ C(k, k_obs+1) Γ(k)/Γ(k+N+2) p(k)
//! ```
//!
//! with both sums over `k = k_obs+1 ..= m`. Only `N` and `k_obs` enter; the
//! per-type database counts are validated but never used.

use serde::{Deserialize, Serialize};

use crate::error::{LrError, Result};
use crate::kpriors::{KPrior, LogWeights, Support};
use crate::numerics::{
    log_binomial_unchecked, log_gamma_unchecked, log_sum_series_multi, AnchoredLogSum,
    SeriesConfig, SeriesDiagnostics,
};
use crate::result::{LrResult, Method, ModelTag};
use crate::scalar::Real;

/// Database summary for a rare type match.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RareMatchData {
    n_db: u64,
    k_obs: u64,
    counts: Option<Vec<u64>>,
}

impl RareMatchData {
    pub fn new(n_db: u64, k_obs: u64) -> Result<Self> {
        if k_obs > n_db {
            return Err(LrError::invalid("k-obs", "<= db-size", k_obs));
        }
        if n_db > 0 && k_obs == 0 {
            return Err(LrError::invalid("k-obs", ">= 1 when the database is non-empty", k_obs));
        }
        Ok(Self {
            n_db,
            k_obs,
            counts: None,
        })
    }

    /// Builds the summary from per-type counts of the observed types.
    pub fn from_counts(counts: Vec<u64>) -> Result<Self> {
        if counts.contains(&0) {
            return Err(LrError::invalid("counts", "all >= 1", format!("{counts:?}")));
        }
        let n_db = counts.iter().sum();
        Ok(Self {
            n_db,
            k_obs: counts.len() as u64,
            counts: Some(counts),
        })
    }

    /// Attaches counts, checking them against `(N, k_obs)`.
    pub fn with_counts(self, counts: Vec<u64>) -> Result<Self> {
        let from = Self::from_counts(counts)?;
        if from.n_db != self.n_db || from.k_obs != self.k_obs {
            return Err(LrError::invalid(
                "counts",
                "consistent with db-size and k-obs",
                format!("sum {} over {} types", from.n_db, from.k_obs),
            ));
        }
        Ok(from)
    }

    pub fn n_db(&self) -> u64 {
        self.n_db
    }

    pub fn k_obs(&self) -> u64 {
        self.k_obs
    }

    pub fn counts(&self) -> Option<&[u64]> {
        self.counts.as_deref()
    }
}

/// Prior over `K` plus the symmetric Dirichlet hyperparameter (fixed at 1)
/// and the number `m` of possible profiles (`None`: unbounded).
#[derive(Debug, Clone, PartialEq)]
pub struct DirichletModel<T> {
    pub k_prior: KPrior<T>,
    alpha: T,
    pub m: Option<u64>,
    pub series: SeriesConfig<T>,
}

impl<T: Real> DirichletModel<T> {
    pub fn new(k_prior: KPrior<T>, m: Option<u64>) -> Result<Self> {
        Self::with_alpha(k_prior, T::one(), m)
    }

    /// The series form is only available for `alpha = 1`; anything else is
    /// rejected.
    pub fn with_alpha(k_prior: KPrior<T>, alpha: T, m: Option<u64>) -> Result<Self> {
        if alpha != T::one() {
            return Err(LrError::UnsupportedAlpha(alpha.to_f64().unwrap_or(f64::NAN)));
        }
        if m == Some(0) {
            return Err(LrError::invalid("m", ">= 1", 0));
        }
        Ok(Self {
            k_prior,
            alpha,
            m,
            series: SeriesConfig::default(),
        })
    }

    pub fn alpha(&self) -> T {
        self.alpha
    }

    /// Effective upper bound on `k`: the smaller of `m` and the prior's own
    /// truncation.
    pub fn k_max(&self) -> Option<u64> {
        match (self.m, self.k_prior.support_max()) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        }
    }
}

/// Sums both series over the prior's support restricted to `k > k_obs`
/// and returns the full-Bayes result. `base(k)` is the log of the numerator
/// term; the denominator term is that times `1 / (k + N + 1)`.
fn series_lr<T, F>(
    support: Support,
    data: &RareMatchData,
    m: Option<u64>,
    cfg: &SeriesConfig<T>,
    base: F,
) -> Result<LrResult<T>>
where
    T: Real,
    F: Fn(u64) -> T,
{
    let min_k = data.k_obs + 1;
    let support = support.clamp(min_k, m);
    if support.is_empty() {
        return Err(LrError::EmptySupport { min_k });
    }
    let shift = T::from_count(data.n_db + 1);
    // denominator terms are the numerator terms over (k + N + 1)
    let pair = |k: u64| (base(k), [-(T::from_count(k) + shift).ln()]);

    let (numerator, [ln_ratio], diagnostics) = match support {
        Support::Points(points) => {
            let mut acc = AnchoredLogSum::<T, 1>::default();
            let mut peak = T::neg_infinity();
            for &k in &points {
                let (t, offsets) = pair(k);
                acc.push(t, offsets);
                peak = peak.max(t);
            }
            let diag = SeriesDiagnostics {
                terms_evaluated: points.len() as u64,
                k_stop: *points.last().expect("non-empty support"),
                truncated: false,
                peak_log_term: peak,
            };
            (acc.log_sum(), acc.log_ratios(), diag)
        }
        Support::Range { min, max } => log_sum_series_multi(pair, min, max, cfg)?,
    };
    if !numerator.is_finite() {
        return Err(LrError::EmptySupport { min_k });
    }
    let ln_lr = -ln_ratio - T::LN_2();
    Ok(LrResult::from_ln(ln_lr, Method::FullBayes, ModelTag::DirichletMultinomial).with_diagnostics(diagnostics))
}

/// `ln Γ(k) - ln Γ(k + N + 1)`, shared by every series form.
fn gamma_ratio<T: Real>(k: u64, n_db: u64) -> T {
    log_gamma_unchecked(T::from_count(k)) - log_gamma_unchecked(T::from_count(k + n_db + 1))
}

/// Full-Bayes LR for an arbitrary weight function over `k`.
pub fn lr_series_weights<T, P>(
    prior: &P,
    m: Option<u64>,
    data: &RareMatchData,
    cfg: &SeriesConfig<T>,
) -> Result<LrResult<T>>
where
    T: Real,
    P: LogWeights<T>,
{
    let j = data.k_obs + 1;
    series_lr(prior.support(), data, m, cfg, |k| {
        log_binomial_unchecked::<T>(k, j) + gamma_ratio::<T>(k, data.n_db) + prior.log_weight(k)
    })
}

/// Full-Bayes LR under the model's prior over `K`.
pub fn lr_series<T: Real>(model: &DirichletModel<T>, data: &RareMatchData) -> Result<LrResult<T>> {
    lr_series_weights(&model.k_prior, model.m, data, &model.series)
}

/// Series LR specialized to a Poisson(λ) prior truncated at `m`; the factors
/// that do not depend on `k` are dropped.
pub fn lr_poisson<T: Real>(lambda: T, m: Option<u64>, data: &RareMatchData) -> Result<LrResult<T>> {
    KPrior::poisson(lambda, m)?;
    let ln_lambda = lambda.ln();
    let k_obs = data.k_obs;
    series_lr(
        Support::Range { min: 1, max: m },
        data,
        m,
        &SeriesConfig::default(),
        |k| {
            T::from_count(k) * ln_lambda - log_gamma_unchecked(T::from_count(k - k_obs))
                + gamma_ratio::<T>(k, data.n_db)
        },
    )
}

/// Series LR specialized to a negative binomial `(r, q)` prior truncated at `m`.
pub fn lr_negbinomial<T: Real>(r: T, q: T, m: Option<u64>, data: &RareMatchData) -> Result<LrResult<T>> {
    KPrior::negbinomial(r, q, m)?;
    let ln_fail = (-q).ln_1p();
    let k_obs = data.k_obs;
    series_lr(
        Support::Range { min: 1, max: m },
        data,
        m,
        &SeriesConfig::default(),
        |k| {
            let kf = T::from_count(k);
            kf * ln_fail + gamma_ratio::<T>(k, data.n_db) + log_gamma_unchecked(kf + r)
                - log_gamma_unchecked(T::from_count(k - k_obs))
        },
    )
}

/// Plug-in LR `(k̄ α + N) / α` for a rare match with `K` fixed at `k̄`;
/// equals `k̄ + N` at `α = 1`.
pub fn lr_plugin_dirichlet<T: Real>(k_bar: T, data: &RareMatchData, alpha: T) -> Result<LrResult<T>> {
    if !(k_bar > T::zero() && k_bar.is_finite()) {
        return Err(LrError::invalid("k-bar", "> 0", k_bar));
    }
    if !(alpha > T::zero() && alpha.is_finite()) {
        return Err(LrError::invalid("alpha", "> 0", alpha));
    }
    let lr = (k_bar * alpha + T::from_count(data.n_db)) / alpha;
    Ok(LrResult::from_value(lr, Method::Plugin, ModelTag::DirichletMultinomial))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::collections::BTreeMap;

    fn data(n: u64, k_obs: u64) -> RareMatchData {
        RareMatchData::new(n, k_obs).unwrap()
    }

    fn model(prior: KPrior<f64>) -> DirichletModel<f64> {
        DirichletModel::new(prior, None).unwrap()
    }

    #[test]
    fn degenerate_hand_reduction() {
        let r = lr_series(&model(KPrior::degenerate(3).unwrap()), &data(2, 1)).unwrap();
        assert_relative_eq!(r.lr, 3.0, max_relative = 1e-14);
        let diag = r.diagnostics.unwrap();
        assert_eq!(diag.terms_evaluated, 1);
        assert!(!diag.truncated);
        assert_eq!(r.method, Method::FullBayes);
    }

    #[test]
    fn degenerate_closed_form() {
        for (k_bar, n, k_obs) in [(150u64, 100u64, 50u64), (51, 100, 50), (7, 0, 0), (1_000_000, 3, 2)] {
            let r = lr_series(&model(KPrior::degenerate(k_bar).unwrap()), &data(n, k_obs)).unwrap();
            assert_relative_eq!(r.lr, (1 + n + k_bar) as f64 / 2.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn empty_support_is_an_error() {
        let err = lr_series(&model(KPrior::degenerate(40).unwrap()), &data(100, 50)).unwrap_err();
        assert_eq!(err, LrError::EmptySupport { min_k: 51 });
        assert!(err.to_string().contains("prior support excludes observed data"));
        let truncated = DirichletModel::new(KPrior::poisson(100.0, None).unwrap(), Some(50)).unwrap();
        assert!(matches!(lr_series(&truncated, &data(100, 50)), Err(LrError::EmptySupport { .. })));
        assert!(matches!(
            lr_poisson(10.0, Some(50), &data(100, 50)),
            Err(LrError::EmptySupport { .. })
        ));
    }

    #[test]
    fn alpha_other_than_one_rejected() {
        let err = DirichletModel::with_alpha(KPrior::degenerate(3).unwrap(), 0.5, None).unwrap_err();
        assert_eq!(err, LrError::UnsupportedAlpha(0.5));
        assert!(DirichletModel::with_alpha(KPrior::degenerate(3).unwrap(), 1.0, None).is_ok());
    }

    #[test]
    fn data_validation() {
        assert!(RareMatchData::new(10, 11).is_err());
        assert!(RareMatchData::new(10, 0).is_err());
        assert!(RareMatchData::new(0, 0).is_ok());
        let d = RareMatchData::from_counts(vec![3, 1, 2]).unwrap();
        assert_eq!((d.n_db(), d.k_obs()), (6, 3));
        assert!(RareMatchData::from_counts(vec![3, 0]).is_err());
        assert!(data(6, 3).with_counts(vec![4, 1, 1]).is_ok());
        assert!(data(6, 3).with_counts(vec![4, 2]).is_err());
        assert!(data(7, 3).with_counts(vec![4, 1, 1]).is_err());
    }

    #[test]
    fn poisson_specialization_matches_general_series() {
        for (lambda, n, k_obs) in [(1000.0, 100, 50), (3.5, 4, 2), (1.0, 100, 100), (250.0, 30, 12)] {
            let general = lr_series(&model(KPrior::poisson(lambda, None).unwrap()), &data(n, k_obs)).unwrap();
            let special = lr_poisson(lambda, None, &data(n, k_obs)).unwrap();
            assert_relative_eq!(general.lr, special.lr, max_relative = 1e-10);
        }
    }

    #[test]
    fn negbinomial_specialization_matches_general_series() {
        for (r, q, n, k_obs) in [(1.0, 0.5, 100, 50), (10.0, 0.2, 20, 5), (2.5, 0.001, 100, 70)] {
            let general =
                lr_series(&model(KPrior::negbinomial(r, q, None).unwrap()), &data(n, k_obs)).unwrap();
            let special = lr_negbinomial(r, q, None, &data(n, k_obs)).unwrap();
            assert_relative_eq!(general.lr, special.lr, max_relative = 1e-10);
        }
    }

    #[test]
    fn geometric_prior_matches_hand_expanded_finite_sum() {
        // r = 1, q = 0.5, N = 2, k_obs = 1, m = 50:
        // term(k) ∝ C(k, 2) Γ(k)/Γ(k+3) 0.5^k = ½ (k-1)/((k+1)(k+2)) 0.5^k
        let (mut num, mut den) = (0.0_f64, 0.0_f64);
        for k in 2..=50u64 {
            let kf = k as f64;
            let t = 0.5 * (kf - 1.0) / ((kf + 1.0) * (kf + 2.0)) * 0.5f64.powi(k as i32);
            num += t;
            den += t / (kf + 3.0);
        }
        let expected = 0.5 * num / den;
        let got = lr_negbinomial(1.0, 0.5, Some(50), &data(2, 1)).unwrap();
        assert_relative_eq!(got.lr, expected, max_relative = 1e-12);
    }

    #[test]
    fn counts_never_change_the_value() {
        let m = model(KPrior::poisson(40.0, None).unwrap());
        let a = lr_series(&m, &data(10, 4).with_counts(vec![7, 1, 1, 1]).unwrap()).unwrap();
        let b = lr_series(&m, &data(10, 4).with_counts(vec![2, 3, 3, 2]).unwrap()).unwrap();
        let c = lr_series(&m, &data(10, 4)).unwrap();
        assert_eq!(a.lr.to_bits(), b.lr.to_bits());
        assert_eq!(a.lr.to_bits(), c.lr.to_bits());
    }

    #[test]
    fn custom_table_prior() {
        // mass 1 on k = 5 and 3 on k = 9, N = 4, k_obs = 3
        let prior = KPrior::custom_from_weights([(5u64, 1.0), (9, 3.0), (2, 7.0)]).unwrap();
        let (n, j) = (4u64, 4u64);
        let term = |k: u64, w: f64| {
            let binom = (0..j).fold(1.0, |acc, i| acc * (k - i) as f64 / (i + 1) as f64);
            let ratio: f64 = (k..=k + n).map(|x| 1.0 / x as f64).product();
            binom * ratio * w
        };
        let num = term(5, 1.0) + term(9, 3.0);
        let den = term(5, 1.0) / 10.0 + term(9, 3.0) / 14.0;
        let got = lr_series(&model(prior), &data(n, j - 1)).unwrap();
        assert_relative_eq!(got.lr, 0.5 * num / den, max_relative = 1e-12);
        assert_eq!(got.diagnostics.unwrap().terms_evaluated, 2);
    }

    #[test]
    fn prior_scale_invariance() {
        use crate::kpriors::Shifted;
        let prior = KPrior::negbinomial(3.0, 0.01, None).unwrap();
        let d = data(60, 25);
        let cfg = SeriesConfig::default();
        let base = lr_series_weights(&prior, None, &d, &cfg).unwrap();
        for offset in [-700.0, -3.3, 0.0, 12.5, 650.0] {
            let shifted = Shifted { inner: &prior, offset };
            let got = lr_series_weights(&shifted, None, &d, &cfg).unwrap();
            assert_relative_eq!(got.lr, base.lr, max_relative = 1e-12);
        }
        let table: BTreeMap<u64, f64> = (26..200).map(|k| (k, prior.log_pmf(k))).collect();
        let raised: BTreeMap<u64, f64> = table.iter().map(|(&k, &w)| (k, w + 40.0)).collect();
        let a = lr_series(&model(KPrior::custom(table).unwrap()), &d).unwrap();
        let b = lr_series(&model(KPrior::custom(raised).unwrap()), &d).unwrap();
        assert_relative_eq!(a.lr, b.lr, max_relative = 1e-12);
    }

    #[test]
    fn plugin_values() {
        assert_eq!(lr_plugin_dirichlet(1000.0, &data(100, 50), 1.0).unwrap().lr, 1100.0);
        assert_eq!(lr_plugin_dirichlet(1.0, &data(0, 0), 1.0).unwrap().lr, 1.0);
        assert_eq!(lr_plugin_dirichlet(10.0, &data(100, 50), 0.5).unwrap().lr, 210.0);
        assert!(lr_plugin_dirichlet(0.0, &data(100, 50), 1.0).is_err());
        let r = lr_plugin_dirichlet(1000.0, &data(100, 50), 1.0).unwrap();
        assert_eq!(r.method, Method::Plugin);
    }

    #[test]
    fn poisson_grows_like_half_lambda() {
        let r = lr_poisson(1e5_f64, None, &data(100, 50)).unwrap();
        assert!((r.lr / 5e4 - 1.0).abs() < 0.02);
        let small = lr_poisson(1.0_f64, None, &data(100, 100)).unwrap();
        assert!(small.lr.is_finite() && small.lr > 101.0);
    }

    #[test]
    fn finite_m_caps_the_series() {
        let d = data(20, 5);
        let capped = lr_poisson(50.0, Some(12), &d).unwrap();
        let diag = capped.diagnostics.unwrap();
        assert_eq!(diag.k_stop, 12);
        assert!(!diag.truncated);
        assert_eq!(diag.terms_evaluated, 7);
        let via_model =
            lr_series(&DirichletModel::new(KPrior::poisson(50.0, None).unwrap(), Some(12)).unwrap(), &d).unwrap();
        assert_relative_eq!(capped.lr, via_model.lr, max_relative = 1e-12);
        // m = 20^10 is indistinguishable from unbounded
        let huge = lr_poisson(50.0, Some(20u64.pow(10)), &d).unwrap();
        let unbounded = lr_poisson(50.0, None, &d).unwrap();
        assert_eq!(huge.lr, unbounded.lr);
    }
}
