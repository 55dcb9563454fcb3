//! Priors over `K`, the number of distinct types present in the population.
//!
//! Log-pmfs are unnormalized: every likelihood ratio built on them is a ratio
//! of two sums weighted by the same prior, so normalizing constants cancel.
//! Support always starts at `k = 1`; truncation at `m` masks the support
//! rather than renormalizing.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use crate::error::{LrError, Result};
use crate::numerics::{log_gamma_unchecked, log_sum_series, SeriesConfig};
use crate::scalar::Real;

/// Where a prior (or any weight function over `k`) can put mass.
#[derive(Debug, Clone, PartialEq)]
pub enum Support {
    /// Explicit, finite, strictly increasing list of points.
    Points(Vec<u64>),
    /// Every integer in `min..=max`; `max = None` is unbounded.
    Range { min: u64, max: Option<u64> },
}

impl Support {
    /// Restricts the support to `lo..=hi`.
    pub fn clamp(&self, lo: u64, hi: Option<u64>) -> Support {
        let within = |k: u64| k >= lo && hi.is_none_or(|h| k <= h);
        match self {
            Support::Points(points) => {
                Support::Points(points.iter().copied().filter(|&k| within(k)).collect())
            }
            Support::Range { min, max } => {
                let max = match (max, hi) {
                    (Some(a), Some(b)) => Some((*a).min(b)),
                    (a, b) => a.or(b),
                };
                Support::Range {
                    min: (*min).max(lo),
                    max,
                }
            }
        }
    }

    pub fn is_empty(&self) -> bool {
        match self {
            Support::Points(points) => points.is_empty(),
            Support::Range { min, max } => max.is_some_and(|m| m < *min),
        }
    }
}

/// Unnormalized log-weights over `k`.
pub trait LogWeights<T> {
    /// `ln p(k)` up to an additive constant; `-∞` outside the support.
    fn log_weight(&self, k: u64) -> T;
    fn support(&self) -> Support;
}

/// A weight function with a constant added to every log-weight.
#[derive(Debug, Clone, Copy)]
pub struct Shifted<'a, P, T> {
    pub inner: &'a P,
    pub offset: T,
}

impl<P: LogWeights<T>, T: Real> LogWeights<T> for Shifted<'_, P, T> {
    fn log_weight(&self, k: u64) -> T {
        self.inner.log_weight(k) + self.offset
    }

    fn support(&self) -> Support {
        self.inner.support()
    }
}

/// Prior over the number of types `K`.
#[derive(Debug, Clone, PartialEq)]
pub enum KPrior<T> {
    /// All mass on `k_bar`.
    Degenerate { k_bar: u64 },
    /// Poisson(λ) restricted to `{1, …, m}`.
    PoissonTrunc { lambda: T, m: Option<u64> },
    /// Negative binomial `C(k + r - 1, k) (1 - q)^k q^r` restricted to `{1, …, m}`.
    NegBinomialTrunc { r: T, q: T, m: Option<u64> },
    /// Arbitrary log-weights; keys are the support.
    CustomTable { log_weights: BTreeMap<u64, T> },
}

fn check_m(m: Option<u64>) -> Result<()> {
    match m {
        Some(0) => Err(LrError::invalid("m", ">= 1", 0)),
        _ => Ok(()),
    }
}

impl<T: Real> KPrior<T> {
    pub fn degenerate(k_bar: u64) -> Result<Self> {
        if k_bar == 0 {
            return Err(LrError::invalid("k", ">= 1", k_bar));
        }
        Ok(Self::Degenerate { k_bar })
    }

    pub fn poisson(lambda: T, m: Option<u64>) -> Result<Self> {
        if !(lambda > T::zero() && lambda.is_finite()) {
            return Err(LrError::invalid("lambda", "> 0 and finite", lambda));
        }
        check_m(m)?;
        Ok(Self::PoissonTrunc { lambda, m })
    }

    pub fn negbinomial(r: T, q: T, m: Option<u64>) -> Result<Self> {
        if !(r > T::zero() && r.is_finite()) {
            return Err(LrError::invalid("r", "> 0 and finite", r));
        }
        if !(q > T::zero() && q < T::one()) {
            return Err(LrError::invalid("q", "in (0, 1)", q));
        }
        check_m(m)?;
        Ok(Self::NegBinomialTrunc { r, q, m })
    }

    /// Negative binomial with untruncated mean `lambda`: `q = r / (r + λ)`.
    pub fn nb_from_mean(lambda: T, r: T, m: Option<u64>) -> Result<Self> {
        if !(lambda > T::zero() && lambda.is_finite()) {
            return Err(LrError::invalid("mean", "> 0 and finite", lambda));
        }
        if !(r > T::zero() && r.is_finite()) {
            return Err(LrError::invalid("r", "> 0 and finite", r));
        }
        Self::negbinomial(r, r / (r + lambda), m)
    }

    pub fn custom(log_weights: BTreeMap<u64, T>) -> Result<Self> {
        if log_weights.is_empty() {
            return Err(LrError::invalid("custom prior", "non-empty", "{}"));
        }
        for (&k, &w) in &log_weights {
            if k == 0 {
                return Err(LrError::invalid("custom prior key", ">= 1", k));
            }
            if !w.is_finite() {
                return Err(LrError::invalid("custom prior log-weight", "finite", w));
            }
        }
        Ok(Self::CustomTable { log_weights })
    }

    /// Custom table from linear (non-negative) weights; zero weights are dropped.
    pub fn custom_from_weights(weights: impl IntoIterator<Item = (u64, T)>) -> Result<Self> {
        let mut table = BTreeMap::new();
        for (k, w) in weights {
            if !(w >= T::zero() && w.is_finite()) {
                return Err(LrError::invalid("custom prior weight", ">= 0 and finite", w));
            }
            if w > T::zero() {
                table.insert(k, w.ln());
            }
        }
        Self::custom(table)
    }

    /// Largest `k` with mass, if bounded.
    pub fn support_max(&self) -> Option<u64> {
        match self {
            KPrior::Degenerate { k_bar } => Some(*k_bar),
            KPrior::PoissonTrunc { m, .. } | KPrior::NegBinomialTrunc { m, .. } => *m,
            KPrior::CustomTable { log_weights } => log_weights.keys().next_back().copied(),
        }
    }

    /// Unnormalized `ln p(k)`; `-∞` outside the support.
    pub fn log_pmf(&self, k: u64) -> T {
        let outside = k == 0 || self.support_max().is_some_and(|m| k > m);
        if outside {
            return T::neg_infinity();
        }
        let kf = T::from_count(k);
        match self {
            KPrior::Degenerate { k_bar } => {
                if k == *k_bar {
                    T::zero()
                } else {
                    T::neg_infinity()
                }
            }
            KPrior::PoissonTrunc { lambda, .. } => {
                -*lambda + kf * lambda.ln() - log_gamma_unchecked(kf + T::one())
            }
            KPrior::NegBinomialTrunc { r, q, .. } => {
                log_gamma_unchecked(kf + *r) - log_gamma_unchecked(*r)
                    - log_gamma_unchecked(kf + T::one())
                    + kf * (-*q).ln_1p()
                    + *r * q.ln()
            }
            KPrior::CustomTable { log_weights } => {
                log_weights.get(&k).copied().unwrap_or(T::neg_infinity())
            }
        }
    }

    /// `E(K)`. Closed form for the unbounded parametric priors, explicit
    /// summation otherwise.
    pub fn mean(&self) -> Result<T> {
        match self {
            KPrior::Degenerate { k_bar } => Ok(T::from_count(*k_bar)),
            KPrior::PoissonTrunc { lambda, m: None } => Ok(*lambda),
            KPrior::NegBinomialTrunc { r, q, m: None } => Ok((T::one() - *q) * *r / *q),
            _ => Ok(self.moments_by_summation()?.0),
        }
    }

    /// `Var(K)`, same conventions as [`KPrior::mean`].
    pub fn variance(&self) -> Result<T> {
        match self {
            KPrior::Degenerate { .. } => Ok(T::zero()),
            KPrior::PoissonTrunc { lambda, m: None } => Ok(*lambda),
            KPrior::NegBinomialTrunc { r, q, m: None } => {
                Ok((T::one() - *q) * *r / (*q * *q))
            }
            _ => Ok(self.moments_by_summation()?.1),
        }
    }

    /// Mean and variance of the normalized prior on its (truncated) support,
    /// by summation in log space.
    pub fn moments_by_summation(&self) -> Result<(T, T)> {
        let cfg = SeriesConfig::default();
        let sum_over = |support: Support, f: &dyn Fn(u64) -> T| -> Result<T> {
            match support {
                Support::Points(points) => {
                    let mut acc = crate::numerics::LogSumAccumulator::default();
                    for k in points {
                        acc.push(f(k));
                    }
                    Ok(acc.log_sum())
                }
                Support::Range { min, max } if max.is_some_and(|m| m < min) => Ok(T::neg_infinity()),
                Support::Range { min, max } => Ok(log_sum_series(f, min, max, &cfg)?.0),
            }
        };
        let support = self.support();
        let log_norm = sum_over(support.clone(), &|k| self.log_pmf(k))?;
        if !log_norm.is_finite() {
            return Err(LrError::Domain("prior has no normalizable mass".into()));
        }
        let mean = sum_over(support.clone(), &|k| self.log_pmf(k) + T::from_count(k).ln())?;
        let mean = (mean - log_norm).exp();

        // (k - μ)² p(k) vanishes near μ, which would trip the tail bound, so
        // the two sides of the mean are summed separately.
        let split = mean.floor().to_u64().unwrap_or(u64::MAX);
        let squared_dev = |k: u64| self.log_pmf(k) + T::c(2.0) * (T::from_count(k) - mean).abs().ln();
        let left = sum_over(support.clamp(1, Some(split)), &squared_dev)?;
        let right = sum_over(support.clamp(split.saturating_add(1), None), &squared_dev)?;
        let second = crate::numerics::log_sum_exp(&[left, right]);
        Ok((mean, (second - log_norm).exp()))
    }

    /// Reads a custom prior from a two-column CSV (`k,weight`, linear weights).
    /// A non-numeric first row is treated as a header.
    pub fn custom_from_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| LrError::Io(format!("{}: {e}", path.display())))?;
        let mut weights = Vec::new();
        for (line, record) in reader.records().enumerate() {
            let record = record.map_err(|e| LrError::Io(format!("{}: {e}", path.display())))?;
            if record.len() != 2 {
                return Err(LrError::PriorSpec {
                    spec: path.display().to_string(),
                    reason: format!("line {}: expected two columns (k, weight)", line + 1),
                });
            }
            let k = record[0].parse::<u64>();
            let w = record[1].parse::<f64>();
            match (k, w) {
                (Ok(k), Ok(w)) => weights.push((k, T::c(w))),
                _ if line == 0 => continue,
                _ => {
                    return Err(LrError::PriorSpec {
                        spec: path.display().to_string(),
                        reason: format!("line {}: cannot parse '{}'", line + 1, record.as_slice()),
                    })
                }
            }
        }
        Self::custom_from_weights(weights)
    }

    /// Parses the command-line grammar:
    /// `degenerate:k=150`, `poisson:lambda=1000[,m=...]`,
    /// `negbinomial:r=10,q=0.2[,m=...]`, `negbinomial:r=10,mean=40[,m=...]`,
    /// `custom:@file.csv`. `m` accepts an integer or `base^exp` (e.g. `20^10`).
    pub fn parse_spec(spec: &str) -> Result<Self> {
        let fail = |reason: String| LrError::PriorSpec {
            spec: spec.to_string(),
            reason,
        };
        let (kind, rest) = spec
            .split_once(':')
            .ok_or_else(|| fail("expected '<kind>:<params>'".into()))?;
        if kind.trim() == "custom" {
            let path = rest
                .trim()
                .strip_prefix('@')
                .ok_or_else(|| fail("custom prior expects '@path.csv'".into()))?;
            return Self::custom_from_csv(path);
        }

        let mut params = BTreeMap::new();
        for pair in rest.split(',').filter(|p| !p.trim().is_empty()) {
            let (key, value) = pair
                .split_once('=')
                .ok_or_else(|| fail(format!("expected key=value, got '{pair}'")))?;
            if params.insert(key.trim().to_string(), value.trim().to_string()).is_some() {
                return Err(fail(format!("duplicate parameter '{}'", key.trim())));
            }
        }
        let mut take = |key: &str| params.remove(key);
        let real = |key: &str, value: Option<String>| -> Result<T> {
            let value = value.ok_or_else(|| fail(format!("missing parameter '{key}'")))?;
            value
                .parse::<f64>()
                .map(T::c)
                .map_err(|_| fail(format!("'{key}' is not a number: '{value}'")))
        };
        let m = match take("m") {
            None => None,
            Some(v) => Some(parse_count(&v).ok_or_else(|| fail(format!("bad m '{v}'")))?),
        };

        let prior = match kind.trim() {
            "degenerate" => {
                if m.is_some() {
                    return Err(fail("degenerate prior takes no 'm'".into()));
                }
                let k = take("k").ok_or_else(|| fail("missing parameter 'k'".into()))?;
                let k = parse_count(&k).ok_or_else(|| fail(format!("bad k '{k}'")))?;
                Self::degenerate(k)?
            }
            "poisson" => Self::poisson(real("lambda", take("lambda"))?, m)?,
            "negbinomial" => {
                let r = real("r", take("r"))?;
                match (take("q"), take("mean")) {
                    (Some(q), None) => Self::negbinomial(r, real("q", Some(q))?, m)?,
                    (None, Some(mean)) => Self::nb_from_mean(real("mean", Some(mean))?, r, m)?,
                    _ => return Err(fail("negbinomial needs exactly one of 'q' or 'mean'".into())),
                }
            }
            other => return Err(fail(format!("unknown prior kind '{other}'"))),
        };
        if let Some(extra) = params.keys().next() {
            return Err(fail(format!("unexpected parameter '{extra}'")));
        }
        Ok(prior)
    }
}

/// Parses a count, also accepting `base^exp` (e.g. `20^10`).
pub fn parse_count(text: &str) -> Option<u64> {
    match text.split_once('^') {
        Some((base, exp)) => {
            let base: u64 = base.trim().parse().ok()?;
            let exp: u32 = exp.trim().parse().ok()?;
            base.checked_pow(exp)
        }
        None => text.trim().parse().ok(),
    }
}

impl<T: Real> LogWeights<T> for KPrior<T> {
    fn log_weight(&self, k: u64) -> T {
        self.log_pmf(k)
    }

    fn support(&self) -> Support {
        match self {
            KPrior::Degenerate { k_bar } => Support::Points(vec![*k_bar]),
            KPrior::CustomTable { log_weights } => Support::Points(log_weights.keys().copied().collect()),
            KPrior::PoissonTrunc { m, .. } | KPrior::NegBinomialTrunc { m, .. } => {
                Support::Range { min: 1, max: *m }
            }
        }
    }
}

impl<T: Real> fmt::Display for KPrior<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let m = |m: &Option<u64>| m.map(|m| format!(",m={m}")).unwrap_or_default();
        match self {
            KPrior::Degenerate { k_bar } => write!(f, "degenerate:k={k_bar}"),
            KPrior::PoissonTrunc { lambda, m: trunc } => write!(f, "poisson:lambda={lambda}{}", m(trunc)),
            KPrior::NegBinomialTrunc { r, q, m: trunc } => {
                write!(f, "negbinomial:r={r},q={q}{}", m(trunc))
            }
            KPrior::CustomTable { log_weights } => write!(f, "custom:{} points", log_weights.len()),
        }
    }
}

/// Total-variation distance between two normalized priors over `1..=k_max`.
pub fn total_variation<T: Real>(a: &KPrior<T>, b: &KPrior<T>, k_max: u64) -> T {
    let normalized = |p: &KPrior<T>| -> Vec<T> {
        let logs: Vec<T> = (1..=k_max).map(|k| p.log_pmf(k)).collect();
        let norm = crate::numerics::log_sum_exp(&logs);
        logs.into_iter().map(|l| (l - norm).exp()).collect()
    };
    let pa = normalized(a);
    let pb = normalized(b);
    pa.iter().zip(&pb).map(|(x, y)| (*x - *y).abs()).sum::<T>() * T::c(0.5)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn degenerate_pmf() {
        let p = KPrior::<f64>::degenerate(5).unwrap();
        assert_eq!(p.log_pmf(5), 0.0);
        assert_eq!(p.log_pmf(4), f64::NEG_INFINITY);
        assert_eq!(p.log_pmf(6), f64::NEG_INFINITY);
        assert!(KPrior::<f64>::degenerate(0).is_err());
    }

    #[test]
    fn poisson_pmf() {
        let p = KPrior::poisson(2.0_f64, None).unwrap();
        let expected = -2.0 + 2.0 * 2f64.ln() - 2f64.ln();
        assert_relative_eq!(p.log_pmf(2), expected, max_relative = 1e-14);
        assert_eq!(p.log_pmf(0), f64::NEG_INFINITY);
        let truncated = KPrior::poisson(2.0_f64, Some(3)).unwrap();
        assert_eq!(truncated.log_pmf(4), f64::NEG_INFINITY);
        assert_eq!(truncated.log_pmf(3), p.log_pmf(3));
    }

    #[test]
    fn geometric_special_case_of_negbinomial() {
        let p = KPrior::negbinomial(1.0_f64, 0.5, None).unwrap();
        assert_relative_eq!(p.log_pmf(3), 4.0 * 0.5f64.ln(), max_relative = 1e-14);
        // direct pmf: C(k + r - 1, k) (1 - q)^k q^r with r = 1 is (1 - q)^k q
        for k in 1..30u64 {
            let direct = 0.5f64.powi(k as i32) * 0.5;
            assert_relative_eq!(p.log_pmf(k).exp(), direct, max_relative = 1e-13);
        }
    }

    #[test]
    fn closed_form_moments() {
        let d = KPrior::<f64>::degenerate(150).unwrap();
        assert_eq!(d.mean().unwrap(), 150.0);
        assert_eq!(d.variance().unwrap(), 0.0);

        let p = KPrior::poisson(1000.0_f64, None).unwrap();
        assert_eq!(p.mean().unwrap(), 1000.0);
        let p7 = KPrior::poisson(7.0_f64, None).unwrap();
        assert_eq!(p7.variance().unwrap(), 7.0);

        let nb = KPrior::negbinomial(10.0_f64, 0.2, None).unwrap();
        assert_relative_eq!(nb.mean().unwrap(), 40.0, max_relative = 1e-14);
        assert_relative_eq!(nb.variance().unwrap(), 200.0, max_relative = 1e-14);
    }

    #[test]
    fn summed_moments_match_closed_forms() {
        let cases = [
            KPrior::poisson(1000.0_f64, None).unwrap(),
            KPrior::poisson(60.0_f64, None).unwrap(),
            KPrior::negbinomial(10.0_f64, 0.02, None).unwrap(),
            KPrior::nb_from_mean(500.0_f64, 8.0, None).unwrap(),
        ];
        // mass at k = 0 is below 1e-12 for every case, so dropping it is invisible
        for prior in &cases {
            let (mean, var) = prior.moments_by_summation().unwrap();
            assert_relative_eq!(mean, prior.mean().unwrap(), max_relative = 1e-9);
            assert_relative_eq!(var, prior.variance().unwrap(), max_relative = 1e-9);
        }
    }

    #[test]
    fn zero_truncation_shows_when_p0_is_not_small() {
        // P(K = 0) = 0.2^10 here, so the support-from-1 mean is 40 / (1 - 0.2^10)
        let nb = KPrior::negbinomial(10.0_f64, 0.2, None).unwrap();
        let (mean, _) = nb.moments_by_summation().unwrap();
        assert_relative_eq!(mean, 40.0 / (1.0 - 0.2f64.powi(10)), max_relative = 1e-12);
    }

    #[test]
    fn truncated_moments_use_summation() {
        let p = KPrior::poisson(3.0_f64, Some(4)).unwrap();
        let weights: Vec<f64> = (1..=4).map(|k| 3f64.powi(k) / (1..=k).product::<i32>() as f64).collect();
        let z: f64 = weights.iter().sum();
        let mean: f64 = weights.iter().enumerate().map(|(i, w)| (i + 1) as f64 * w).sum::<f64>() / z;
        let second: f64 = weights
            .iter()
            .enumerate()
            .map(|(i, w)| ((i + 1) as f64).powi(2) * w)
            .sum::<f64>()
            / z;
        assert_relative_eq!(p.mean().unwrap(), mean, max_relative = 1e-13);
        assert_relative_eq!(p.variance().unwrap(), second - mean * mean, max_relative = 1e-12);
    }

    #[test]
    fn nb_from_mean_inverts_the_mean() {
        let p = KPrior::nb_from_mean(40.0_f64, 10.0, None).unwrap();
        match p {
            KPrior::NegBinomialTrunc { q, .. } => assert_relative_eq!(q, 0.2, max_relative = 1e-15),
            _ => unreachable!(),
        }
        let sym = KPrior::nb_from_mean(7.5_f64, 7.5, None).unwrap();
        assert!(matches!(sym, KPrior::NegBinomialTrunc { q, .. } if q == 0.5));
        let big = KPrior::nb_from_mean(1000.0_f64, 1000.0, None).unwrap();
        assert_relative_eq!(big.variance().unwrap(), 2000.0, max_relative = 1e-14);
    }

    #[test]
    fn parameter_validation() {
        assert!(KPrior::poisson(0.0_f64, None).is_err());
        assert!(KPrior::poisson(1.0_f64, Some(0)).is_err());
        assert!(KPrior::negbinomial(1.0_f64, 1.0, None).is_err());
        assert!(KPrior::negbinomial(-1.0_f64, 0.5, None).is_err());
        assert!(KPrior::<f64>::custom(BTreeMap::new()).is_err());
        assert!(KPrior::custom(BTreeMap::from([(0u64, 0.0_f64)])).is_err());
    }

    #[test]
    fn spec_grammar() {
        assert_eq!(KPrior::<f64>::parse_spec("degenerate:k=150").unwrap(), KPrior::Degenerate { k_bar: 150 });
        assert_eq!(
            KPrior::<f64>::parse_spec("poisson:lambda=1000").unwrap(),
            KPrior::PoissonTrunc { lambda: 1000.0, m: None }
        );
        assert_eq!(
            KPrior::<f64>::parse_spec("poisson:lambda=10,m=20^10").unwrap(),
            KPrior::PoissonTrunc { lambda: 10.0, m: Some(20u64.pow(10)) }
        );
        assert_eq!(
            KPrior::<f64>::parse_spec("negbinomial:r=10,q=0.2").unwrap(),
            KPrior::NegBinomialTrunc { r: 10.0, q: 0.2, m: None }
        );
        let by_mean = KPrior::<f64>::parse_spec("negbinomial:r=10,mean=40,m=500").unwrap();
        assert!(matches!(by_mean, KPrior::NegBinomialTrunc { m: Some(500), .. }));

        for bad in [
            "poisson",
            "poisson:lambda=-1",
            "poisson:lambda=abc",
            "poisson:mu=3",
            "poisson:lambda=3,lambda=4",
            "negbinomial:r=10",
            "negbinomial:r=10,q=0.2,mean=3",
            "degenerate:k=0",
            "uniform:k=3",
            "custom:file.csv",
        ] {
            assert!(KPrior::<f64>::parse_spec(bad).is_err(), "{bad} should be rejected");
        }
    }

    #[test]
    fn display_round_trips_through_grammar() {
        for spec in ["degenerate:k=7", "poisson:lambda=12.5,m=300", "negbinomial:r=3,q=0.25"] {
            let prior = KPrior::<f64>::parse_spec(spec).unwrap();
            assert_eq!(prior.to_string(), spec);
        }
    }

    #[test]
    fn custom_table_from_csv() {
        let dir = std::env::temp_dir().join(format!("lrcalc-kprior-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("prior.csv");
        std::fs::write(&path, "k,weight\n3,1\n5,3\n9,0\n").unwrap();
        let prior = KPrior::<f64>::parse_spec(&format!("custom:@{}", path.display())).unwrap();
        assert_eq!(prior.support(), Support::Points(vec![3, 5]));
        assert_relative_eq!(prior.mean().unwrap(), (3.0 + 15.0) / 4.0, max_relative = 1e-14);
        assert_eq!(prior.log_pmf(9), f64::NEG_INFINITY);
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn negbinomial_approaches_poisson() {
        let lambda = 20.0_f64;
        let poisson = KPrior::poisson(lambda, None).unwrap();
        let k_max = (lambda + 20.0 * lambda.sqrt()) as u64;
        let distances: Vec<f64> = [20.0, 200.0, 2000.0, 2e5]
            .iter()
            .map(|&r| total_variation(&KPrior::nb_from_mean(lambda, r, None).unwrap(), &poisson, k_max))
            .collect();
        assert!(distances.windows(2).all(|w| w[1] < w[0]), "{distances:?}");
        assert!(*distances.last().unwrap() < 0.01);
    }

    #[test]
    fn support_clamping() {
        let range = Support::Range { min: 1, max: None };
        assert_eq!(range.clamp(5, Some(9)), Support::Range { min: 5, max: Some(9) });
        assert!(Support::Range { min: 1, max: Some(4) }.clamp(5, None).is_empty());
        assert_eq!(Support::Points(vec![2, 6, 9]).clamp(5, Some(8)), Support::Points(vec![6]));
    }
}
