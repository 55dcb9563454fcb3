//! Log-space special functions and adaptive series summation.
//!
//! Every likelihood ratio in this crate is a ratio of sums whose individual
//! terms overflow long before the sums converge (`Γ(k + N + 2)` for modest
//! `k`), so terms are carried as natural logarithms and only the final ratio
//! is exponentiated.

use std::ops::{Div, Mul};

use serde::{Deserialize, Serialize};

use crate::error::{LrError, Result};
use crate::scalar::Real;

/// A positive quantity stored as its natural logarithm. `-∞` encodes zero.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct LogValue<T>(T);

impl<T: Real> LogValue<T> {
    /// Wraps a natural log. Rejects NaN and `+∞`.
    pub fn from_ln(log_magnitude: T) -> Result<Self> {
        if log_magnitude.is_nan() || log_magnitude == T::infinity() {
            return Err(LrError::Domain(format!(
                "log magnitude must be finite or -inf, got {log_magnitude}"
            )));
        }
        Ok(Self(log_magnitude))
    }

    pub fn from_value(value: T) -> Result<Self> {
        if value < T::zero() || value.is_nan() {
            return Err(LrError::Domain(format!("cannot take the log of {value}")));
        }
        Self::from_ln(value.ln())
    }

    pub fn zero() -> Self {
        Self(T::neg_infinity())
    }

    pub fn one() -> Self {
        Self(T::zero())
    }

    pub fn ln(self) -> T {
        self.0
    }

    pub fn log10(self) -> T {
        self.0 / T::LN_10()
    }

    pub fn value(self) -> T {
        self.0.exp()
    }

    pub fn is_zero(self) -> bool {
        self.0 == T::neg_infinity()
    }
}

impl<T: Real> Mul for LogValue<T> {
    type Output = Self;

    fn mul(self, rhs: Self) -> Self {
        Self(self.0 + rhs.0)
    }
}

impl<T: Real> Div for LogValue<T> {
    type Output = Self;

    fn div(self, rhs: Self) -> Self {
        Self(self.0 - rhs.0)
    }
}

/// What an adaptive series evaluation actually did.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesDiagnostics<T> {
    pub terms_evaluated: u64,
    /// Last index included in the sum.
    pub k_stop: u64,
    /// `true` when the tail bound stopped the sum before `k_max`.
    pub truncated: bool,
    pub peak_log_term: T,
}

/// Stopping parameters for [`log_sum_series`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesConfig<T> {
    /// Target bound on the relative truncation error, in `(0, 1e-6]`.
    pub rel_tol: T,
    /// Number of consecutive strictly decreasing terms required before the
    /// tail bound is trusted.
    pub window: u32,
    /// Hard cap on the number of evaluated terms.
    pub max_terms: u64,
}

impl<T: Real> Default for SeriesConfig<T> {
    fn default() -> Self {
        Self {
            rel_tol: T::c(1e-12),
            window: 10,
            max_terms: 10_000_000,
        }
    }
}

impl<T: Real> SeriesConfig<T> {
    fn validate(&self) -> Result<()> {
        if !(self.rel_tol > T::zero() && self.rel_tol <= T::c(1e-6)) {
            return Err(LrError::invalid("rel_tol", "in (0, 1e-6]", self.rel_tol));
        }
        if self.window == 0 {
            return Err(LrError::invalid("window", ">= 1", self.window));
        }
        if self.max_terms == 0 {
            return Err(LrError::invalid("max_terms", ">= 1", self.max_terms));
        }
        Ok(())
    }
}

/// Streaming log-sum-exp anchored at the running maximum.
#[derive(Debug, Clone, Copy)]
pub struct LogSumAccumulator<T> {
    max: T,
    scaled: T,
}

impl<T: Real> Default for LogSumAccumulator<T> {
    fn default() -> Self {
        Self {
            max: T::neg_infinity(),
            scaled: T::zero(),
        }
    }
}

impl<T: Real> LogSumAccumulator<T> {
    pub fn push(&mut self, log_term: T) {
        if log_term == T::neg_infinity() {
            return;
        }
        if log_term > self.max {
            self.scaled = self.scaled * (self.max - log_term).exp() + T::one();
            self.max = log_term;
        } else {
            self.scaled = self.scaled + (log_term - self.max).exp();
        }
    }

    /// Log of the accumulated sum; `-∞` when nothing finite was pushed.
    pub fn log_sum(&self) -> T {
        if self.max == T::neg_infinity() {
            T::neg_infinity()
        } else {
            self.max + self.scaled.ln()
        }
    }
}

/// `ln Σ exp(x_i)` over a finite slice.
pub fn log_sum_exp<T: Real>(log_terms: &[T]) -> T {
    let mut acc = LogSumAccumulator::default();
    for &t in log_terms {
        acc.push(t);
    }
    acc.log_sum()
}

const LANCZOS_G: f64 = 5.242_187_5;
const LANCZOS_SERIES_BASE: f64 = 0.999_999_999_999_997_092;
const LANCZOS_COEFFICIENTS: [f64; 14] = [
    57.156_235_665_862_923_5,
    -59.597_960_355_475_491_2,
    14.136_097_974_741_747_1,
    -0.491_913_816_097_620_199,
    0.339_946_499_848_118_887e-4,
    0.465_236_289_270_485_756e-4,
    -0.983_744_753_048_795_646e-4,
    0.158_088_703_224_912_494e-3,
    -0.210_264_441_724_104_883e-3,
    0.217_439_618_115_212_643e-3,
    -0.164_318_106_536_763_890e-3,
    0.844_182_239_838_527_433e-4,
    -0.261_908_384_015_814_087e-4,
    0.368_991_826_595_316_234e-5,
];

/// Stirling correction coefficients `B_2n / (2n (2n - 1))`, n = 1..7.
const STIRLING_COEFFICIENTS: [f64; 7] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360_360.0,
    1.0 / 156.0,
];

/// Below this the Lanczos form is used, above it the asymptotic series.
const STIRLING_THRESHOLD: f64 = 15.0;

/// `ln Γ(x) - [(x - ½) ln x - x + ½ ln 2π]` for `x >= STIRLING_THRESHOLD`.
fn stirling_correction<T: Real>(x: T) -> T {
    let inv = x.recip();
    let inv2 = inv * inv;
    let mut acc = T::zero();
    for &c in STIRLING_COEFFICIENTS.iter().rev() {
        acc = acc * inv2 + T::c(c);
    }
    acc * inv
}

fn half_ln_two_pi<T: Real>() -> T {
    T::c(0.918_938_533_204_672_741_780_329_736_4)
}

/// Natural log of the gamma function for `x > 0`.
pub fn log_gamma<T: Real>(x: T) -> Result<T> {
    if !(x > T::zero()) || x.is_infinite() {
        return Err(LrError::Domain(format!("log_gamma requires 0 < x < inf, got {x}")));
    }
    Ok(log_gamma_unchecked(x))
}

pub(crate) fn log_gamma_unchecked<T: Real>(x: T) -> T {
    if x < T::c(0.5) {
        return log_gamma_unchecked(x + T::one()) - x.ln();
    }
    if x >= T::c(STIRLING_THRESHOLD) {
        return (x - T::c(0.5)) * x.ln() - x + half_ln_two_pi::<T>() + stirling_correction(x);
    }
    let shifted = x + T::c(LANCZOS_G);
    let lead = (x + T::c(0.5)) * shifted.ln() - shifted;
    let mut series = T::c(LANCZOS_SERIES_BASE);
    let mut denom = x;
    for &c in &LANCZOS_COEFFICIENTS {
        denom = denom + T::one();
        series = series + T::c(c) / denom;
    }
    lead + (T::c(2.506_628_274_631_000_5) * series / x).ln()
}

/// `ln n! - [(n + ½) ln n - n + ½ ln 2π]`, the Stirling remainder.
fn stirling_remainder<T: Real>(n: T) -> T {
    if n >= T::c(STIRLING_THRESHOLD) {
        // ln n! = ln n + ln Γ(n), so the remainder is the Γ(n) correction.
        stirling_correction(n)
    } else {
        log_gamma_unchecked(n + T::one()) - (n + T::c(0.5)) * n.ln() + n - half_ln_two_pi::<T>()
    }
}

/// Natural log of the binomial coefficient `C(n, k)`.
///
/// Uses the Stirling-remainder decomposition so that no two large
/// logarithms are subtracted; the result keeps full relative precision even
/// for `C(10^6, 1)`.
pub fn log_binomial<T: Real>(n: u64, k: u64) -> Result<T> {
    if k > n {
        return Err(LrError::Domain(format!(
            "log_binomial requires 0 <= k <= n, got n = {n}, k = {k}"
        )));
    }
    Ok(log_binomial_unchecked(n, k))
}

pub(crate) fn log_binomial_unchecked<T: Real>(n: u64, k: u64) -> T {
    let j = k.min(n - k);
    if j == 0 {
        return T::zero();
    }
    let nf = T::from_count(n);
    let jf = T::from_count(j);
    let rest = T::from_count(n - j);
    stirling_remainder(nf) - stirling_remainder(jf) - stirling_remainder(rest)
        + T::c(0.5) * (nf / (T::TAU() * jf * rest)).ln()
        + jf * (nf / jf).ln()
        - rest * (-(jf / nf)).ln_1p()
}

/// Log of `Σ_{k = k_start}^{k_stop} exp(term(k))` with adaptive tail truncation.
///
/// Summation stops at `k_max` or as soon as the terms have been strictly
/// decreasing for `cfg.window` consecutive indices and the current term is
/// below `log_sum + ln(rel_tol) - ln(1 / (1 - ρ))`, where `ρ` is the last
/// observed term ratio. The bound assumes the tail is eventually geometric.
pub fn log_sum_series<T, F>(
    mut term: F,
    k_start: u64,
    k_max: Option<u64>,
    cfg: &SeriesConfig<T>,
) -> Result<(T, SeriesDiagnostics<T>)>
where
    T: Real,
    F: FnMut(u64) -> T,
{
    let (sum, [], diag) = log_sum_series_multi(|k| (term(k), []), k_start, k_max, cfg)?;
    Ok((sum, diag))
}

/// Streaming sums `S_0 = Σ exp(t_k)` and `S_c = Σ exp(t_k + o_{c,k})`
/// sharing one anchor, so `ln(S_c / S_0)` never passes through the
/// magnitude of `t_k`.
#[derive(Debug, Clone, Copy)]
pub struct AnchoredLogSum<T, const C: usize> {
    max: T,
    base: T,
    weighted: [T; C],
}

impl<T: Real, const C: usize> Default for AnchoredLogSum<T, C> {
    fn default() -> Self {
        Self {
            max: T::neg_infinity(),
            base: T::zero(),
            weighted: [T::zero(); C],
        }
    }
}

impl<T: Real, const C: usize> AnchoredLogSum<T, C> {
    pub fn push(&mut self, log_term: T, offsets: [T; C]) {
        if log_term == T::neg_infinity() {
            return;
        }
        let rel = if log_term > self.max {
            let rescale = (self.max - log_term).exp();
            self.base = self.base * rescale;
            for w in &mut self.weighted {
                *w = *w * rescale;
            }
            self.max = log_term;
            T::zero()
        } else {
            log_term - self.max
        };
        self.base = self.base + rel.exp();
        for (w, &o) in self.weighted.iter_mut().zip(offsets.iter()) {
            *w = *w + (rel + o).exp();
        }
    }

    /// `ln S_0`; `-∞` when nothing finite was pushed.
    pub fn log_sum(&self) -> T {
        if self.max == T::neg_infinity() {
            T::neg_infinity()
        } else {
            self.max + self.base.ln()
        }
    }

    /// `ln(S_c / S_0)` for each extra channel.
    pub fn log_ratios(&self) -> [T; C] {
        std::array::from_fn(|c| self.weighted[c].ln() - self.base.ln())
    }
}

/// Sums `exp(t_k)` together with `exp(t_k + o_{c,k})` for each of `C`
/// offset channels in one pass, returning `ln S_0` and `ln(S_c / S_0)`.
///
/// `terms(k)` yields `(t_k, [o_{c,k}])`. Channel 0 drives the stopping
/// rule, so offsets must be non-increasing in `k` (their truncation
/// error is then no larger than channel 0's).
pub fn log_sum_series_multi<T, F, const C: usize>(
    mut terms: F,
    k_start: u64,
    k_max: Option<u64>,
    cfg: &SeriesConfig<T>,
) -> Result<(T, [T; C], SeriesDiagnostics<T>)>
where
    T: Real,
    F: FnMut(u64) -> (T, [T; C]),
{
    cfg.validate()?;
    let last = k_max.unwrap_or(u64::MAX);
    if last < k_start {
        return Err(LrError::Domain(format!(
            "empty summation range: k_start = {k_start} > k_max = {last}"
        )));
    }

    let ln_tol = cfg.rel_tol.ln();
    let mut acc = AnchoredLogSum::<T, C>::default();
    let mut previous: Option<T> = None;
    let mut decreasing_run = 0u32;
    let mut peak = T::neg_infinity();
    let mut terms_evaluated = 0u64;
    let mut k = k_start;

    loop {
        let (current, offsets) = terms(k);
        terms_evaluated += 1;
        acc.push(current, offsets);
        if current > peak {
            peak = current;
        }

        if let Some(prev) = previous {
            if current < prev {
                decreasing_run += 1;
            } else {
                decreasing_run = 0;
            }
            if decreasing_run >= cfg.window && current.is_finite() {
                let log_ratio = current - prev;
                // ln(1 / (1 - ρ)) with ρ = exp(log_ratio) < 1
                let tail_factor = -(-log_ratio.exp_m1()).ln();
                if current < acc.log_sum() + ln_tol - tail_factor {
                    break;
                }
            }
        }
        previous = Some(current);

        if k == last {
            break;
        }
        if terms_evaluated >= cfg.max_terms {
            return Err(LrError::NonConvergence {
                terms: terms_evaluated,
                k_last: k,
            });
        }
        k += 1;
    }

    Ok((
        acc.log_sum(),
        acc.log_ratios(),
        SeriesDiagnostics {
            terms_evaluated,
            k_stop: k,
            truncated: k != last,
            peak_log_term: peak,
        },
    ))
}
