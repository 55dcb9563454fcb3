//! Independent checks for the closed forms and the series.
//!
//! * [`beta_lr_quadrature`] integrates the beta posterior moments numerically.
//! * [`dirichlet_posterior_mean_exact`] walks the full hierarchical model
//!   (`K → Type → Θ → B, E_s`) on desk-sized instances, either over every
//!   type assignment or with the assignment sum collapsed by symmetry.
//! * [`dirichlet_posterior_mean_mc`] samples the same model forward and
//!   importance-weights by the likelihood of the observed data.
//!
//! None of these reuse the series code they are meant to check.

use std::f64::consts::PI;

use itertools::Itertools;
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Exp1, Gamma};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::beta_binomial::{BetaParams, BinomialData};
use crate::dirichlet_multinomial::{DirichletModel, RareMatchData};
use crate::error::{LrError, Result};
use crate::kpriors::{LogWeights, Support};
use crate::scalar::Field;

/// Largest instance the exact enumerator accepts.
pub const EXACT_MAX_M: u64 = 12;
pub const EXACT_MAX_N: u64 = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnumerationMode {
    /// Assignments grouped by symmetry into binomial-coefficient counts.
    #[default]
    Collapsed,
    /// Every `C(m, k)` type assignment visited individually.
    Explicit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    /// Cap on integrand evaluations for the quadrature oracle.
    pub quadrature_points: usize,
    pub mc_samples: u64,
    pub rng_seed: u64,
    /// Relative convergence target for the quadrature refinement.
    pub tolerance: f64,
    pub enumeration: EnumerationMode,
    pub bootstrap_replicates: usize,
    /// Below this effective sample size the MC estimate is refused.
    pub min_ess: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            quadrature_points: 100_000,
            mc_samples: 1_000_000,
            rng_seed: 0x5eed,
            tolerance: 1e-12,
            enumeration: EnumerationMode::Collapsed,
            bootstrap_replicates: 200,
            min_ess: 100.0,
        }
    }
}

impl OracleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.quadrature_points == 0 {
            return Err(LrError::invalid("quadrature_points", ">= 1", 0));
        }
        if self.mc_samples == 0 {
            return Err(LrError::invalid("samples", ">= 1", 0));
        }
        if !(self.tolerance > 0.0) {
            return Err(LrError::invalid("tolerance", "> 0", self.tolerance));
        }
        if self.bootstrap_replicates < 2 {
            return Err(LrError::invalid("bootstrap_replicates", ">= 2", self.bootstrap_replicates));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Quadrature
// ---------------------------------------------------------------------------

/// `ln σ(v)` for the logistic function, without overflow.
fn ln_logistic(v: f64) -> f64 {
    if v > 0.0 {
        -(-v).exp().ln_1p()
    } else {
        v - v.exp().ln_1p()
    }
}

/// Log of `θ^a (1 - θ)^c` on a tanh-sinh node, with the node's weight folded in.
struct TanhSinhPanel {
    lo: f64,
    hi: f64,
}

impl TanhSinhPanel {
    /// Returns `(ln θ, ln(1 - θ), ln dθ/dt)` at abscissa `t`.
    fn node(&self, t: f64) -> (f64, f64, f64) {
        let u = 2.0 * (PI / 2.0) * t.sinh();
        let ln_left = ln_logistic(u); // fraction of the panel to the left of θ
        let ln_right = ln_logistic(-u);
        let width = self.hi - self.lo;
        let ln_theta = if self.lo == 0.0 {
            width.ln() + ln_left
        } else {
            (self.lo + width * ln_left.exp()).ln()
        };
        let ln_comp = if self.hi == 1.0 {
            (1.0 - self.lo).ln() + ln_right
        } else {
            (-(self.lo + width * ln_left.exp())).ln_1p()
        };
        let ln_jacobian = width.ln() + PI.ln() + t.cosh().ln() + ln_left + ln_right;
        (ln_theta, ln_comp, ln_jacobian)
    }
}

/// Accumulates `∫ θ^{a_i} (1 - θ)^c dθ` for several exponents `a_i` at once.
struct MomentIntegrals<'a> {
    panels: Vec<TanhSinhPanel>,
    exponents: &'a [f64],
    comp_exponent: f64,
    shift: f64,
    evaluations: usize,
}

const T_MAX: f64 = 9.0;
/// Terms this far (in log) below the running maximum are dropped.
const NEGLIGIBLE: f64 = 60.0;

impl MomentIntegrals<'_> {
    /// Adds the terms at abscissae `offset + j * step` for all integer `j`
    /// (both signs) to `sums`.
    fn add_level(&mut self, offset: f64, step: f64, sums: &mut [f64]) {
        for panel in &self.panels {
            for sign in [1.0, -1.0] {
                let mut j = 0u32;
                let mut seen_bulk = false;
                loop {
                    let t = sign * (offset + j as f64 * step);
                    if t.abs() > T_MAX || (offset == 0.0 && sign < 0.0 && j == 0) {
                        if t.abs() > T_MAX {
                            break;
                        }
                        j += 1;
                        continue;
                    }
                    let (ln_theta, ln_comp, ln_jac) = panel.node(t);
                    self.evaluations += 1;
                    let base = self.comp_exponent * ln_comp + ln_jac - self.shift;
                    let mut all_small = true;
                    for (sum, &a) in sums.iter_mut().zip(self.exponents) {
                        let log_term = a * ln_theta + base;
                        if log_term > -NEGLIGIBLE {
                            all_small = false;
                            seen_bulk = true;
                        }
                        *sum += log_term.exp();
                    }
                    // past the bulk of the mass the terms only keep shrinking
                    if all_small && seen_bulk {
                        break;
                    }
                    j += 1;
                }
            }
        }
    }
}

/// LR for the beta model as `∫ θ p(θ|b) dθ / ∫ θ² p(θ|b) dθ`, by tanh-sinh
/// quadrature of the unnormalized posterior `θ^{α+b-1} (1-θ)^{β+N-b-1}`.
///
/// The interval is split at the mode of the first-moment integrand so that
/// sharp interior peaks (large `N`) sit at a panel endpoint, where the
/// nodes cluster. Step halving continues until both integrals change by
/// less than `cfg.tolerance` relative.
pub fn beta_lr_quadrature(prior: &BetaParams<f64>, data: &BinomialData, cfg: &OracleConfig) -> Result<f64> {
    cfg.validate()?;
    let a = *prior.alpha() + data.b() as f64;
    let c = *prior.beta() + (data.n_db() - data.b()) as f64 - 1.0;
    let exponents = [a, a + 1.0];

    let mut panels = Vec::new();
    if a > 0.0 && c > 0.0 {
        let mode = a / (a + c);
        panels.push(TanhSinhPanel { lo: 0.0, hi: mode });
        panels.push(TanhSinhPanel { lo: mode, hi: 1.0 });
    } else {
        panels.push(TanhSinhPanel { lo: 0.0, hi: 1.0 });
    }

    // Anchor the scaling at the largest first-moment term on a coarse scan.
    let mut shift = f64::NEG_INFINITY;
    for panel in &panels {
        for i in -36..=36 {
            let (ln_theta, ln_comp, ln_jac) = panel.node(i as f64 * T_MAX / 36.0);
            shift = shift.max(a * ln_theta + c * ln_comp + ln_jac);
        }
    }
    if !shift.is_finite() {
        return Err(LrError::QuadratureNonConvergence { estimated_error: f64::NAN });
    }

    let mut quad = MomentIntegrals {
        panels,
        exponents: &exponents,
        comp_exponent: c,
        shift,
        evaluations: 0,
    };

    let mut sums = [0.0; 2];
    let mut step = 0.5;
    quad.add_level(0.0, step, &mut sums);
    let mut previous = [sums[0] * step, sums[1] * step];
    let mut level = 0;
    loop {
        quad.add_level(step / 2.0, step, &mut sums);
        step /= 2.0;
        level += 1;
        let current = [sums[0] * step, sums[1] * step];
        let change = (0..2)
            .map(|i| ((current[i] - previous[i]) / current[i]).abs())
            .fold(0.0, f64::max);
        if level >= 3 && change <= cfg.tolerance {
            if !(current[0] > 0.0 && current[1] > 0.0 && current[0].is_finite()) {
                return Err(LrError::QuadratureNonConvergence { estimated_error: f64::NAN });
            }
            return Ok(current[0] / current[1]);
        }
        if quad.evaluations >= cfg.quadrature_points || level >= 16 {
            return Err(LrError::QuadratureNonConvergence { estimated_error: change });
        }
        previous = current;
    }
}

// ---------------------------------------------------------------------------
// Exact enumeration
// ---------------------------------------------------------------------------

/// A set of `k` occupied profile indices out of `m`, strictly increasing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeAssignment {
    positions: Vec<u64>,
}

impl TypeAssignment {
    pub fn new(positions: Vec<u64>, m: u64) -> Result<Self> {
        let increasing = positions.windows(2).all(|w| w[0] < w[1]);
        if !increasing || positions.last().is_some_and(|&p| p >= m) {
            return Err(LrError::invalid(
                "type assignment",
                "strictly increasing indices below m",
                format!("{positions:?}"),
            ));
        }
        Ok(Self { positions })
    }

    pub fn positions(&self) -> &[u64] {
        &self.positions
    }

    pub fn contains(&self, position: u64) -> bool {
        self.positions.binary_search(&position).is_ok()
    }
}

/// Observed data laid out over the `m` profile indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelledData {
    /// `(profile index, database count)` for every observed type.
    pub observed: Vec<(u64, u64)>,
    /// Index of the suspect's (unobserved) type.
    pub suspect: u64,
}

impl LabelledData {
    /// Observed types at indices `0..k_obs`, suspect at `k_obs`. When the
    /// data carry no counts, the first type takes `N - k_obs + 1` copies and
    /// the rest one each.
    pub fn canonical(data: &RareMatchData) -> Self {
        let counts = data.counts().map(<[u64]>::to_vec).unwrap_or_else(|| {
            let k = data.k_obs();
            (0..k).map(|i| if i == 0 { data.n_db() - k + 1 } else { 1 }).collect()
        });
        Self {
            observed: counts.into_iter().enumerate().map(|(i, c)| (i as u64, c)).collect(),
            suspect: data.k_obs(),
        }
    }

    fn required(&self) -> Vec<u64> {
        let mut req: Vec<u64> = self.observed.iter().map(|&(p, _)| p).collect();
        req.push(self.suspect);
        req.sort_unstable();
        req
    }

    fn n_db(&self) -> u64 {
        self.observed.iter().map(|&(_, c)| c).sum()
    }
}

fn factorial<S: Field>(n: u64) -> S {
    (2..=n).fold(S::one(), |acc, i| acc * S::from_count(i))
}

fn binomial<S: Field>(n: u64, k: u64) -> S {
    (0..k).fold(S::one(), |acc, i| acc * S::from_count(n - i) / S::from_count(i + 1))
}

/// `E[Π θ_i^{c_i}]` under a symmetric Dirichlet(1) on `k` categories:
/// `Γ(k) / Γ(k + Σc) · Π c_i!`.
fn dirichlet_moment<S: Field>(k: u64, counts: impl IntoIterator<Item = u64>) -> S {
    let mut total = 0;
    let mut numerator = S::one();
    for c in counts {
        total += c;
        numerator = numerator * factorial::<S>(c);
    }
    // Γ(k) / Γ(k + total) = 1 / (k (k + 1) ... (k + total - 1))
    let rising = (0..total).fold(S::one(), |acc, i| acc * S::from_count(k + i));
    numerator / rising
}

fn effective_m(model: &DirichletModel<f64>) -> Option<u64> {
    model.m.or(model.k_prior.support_max())
}

/// Prior weights `p(k)` for `k` in `1..=m`, as exact scalars (zero-weight
/// points omitted).
fn prior_weights<S: Field>(model: &DirichletModel<f64>, m: u64) -> Vec<(u64, S)> {
    (1..=m)
        .filter_map(|k| {
            let w = model.k_prior.log_weight(k).exp();
            (w > 0.0).then(|| (k, S::from_f64_exact(w).expect("finite prior weight")))
        })
        .collect()
}

/// `E(Θ_{e_s} | E_s = e_s, B = b)` by walking the hierarchical model.
///
/// For each `k`, each type assignment `t` has probability `p(k) / C(m, k)`;
/// the data constrain `t` to contain every observed index and the suspect's.
/// Given `t`, the frequencies on `t` are Dirichlet(1), so the (ordered)
/// likelihood of database plus suspect and its product with `θ_{e_s}` are
/// both Dirichlet moments.
pub fn posterior_mean_labelled<S: Field>(
    model: &DirichletModel<f64>,
    data: &LabelledData,
    m: u64,
    mode: EnumerationMode,
) -> Result<S> {
    let n = data.n_db();
    if m > EXACT_MAX_M || n > EXACT_MAX_N {
        return Err(LrError::ScaleExceeded {
            m,
            n,
            max_m: EXACT_MAX_M,
            max_n: EXACT_MAX_N,
        });
    }
    let required = data.required();
    // more distinct types than the population can hold: no admissible k
    if required.len() as u64 > m {
        return Err(LrError::EmptySupport {
            min_k: required.len() as u64,
        });
    }
    if required.windows(2).any(|w| w[0] == w[1]) || required.last().is_some_and(|&p| p >= m) {
        return Err(LrError::invalid(
            "labelled data",
            "distinct indices below m",
            format!("{required:?}"),
        ));
    }
    let j = required.len() as u64;
    let counts = |suspect_count: u64| {
        data.observed
            .iter()
            .map(|&(_, c)| c)
            .chain(std::iter::once(suspect_count))
            .collect::<Vec<_>>()
    };
    let with_suspect = counts(1);
    let with_crime_stain = counts(2);

    let mut evidence = S::zero();
    let mut weighted = S::zero();
    for (k, weight) in prior_weights::<S>(model, m) {
        if k < j {
            continue;
        }
        let assignment_prob = weight / binomial::<S>(m, k);
        let admissible: S = match mode {
            EnumerationMode::Collapsed => binomial(m - j, k - j),
            EnumerationMode::Explicit => {
                let mut count = S::zero();
                for positions in (0..m).combinations(k as usize) {
                    let t = TypeAssignment::new(positions, m)?;
                    if required.iter().all(|&p| t.contains(p)) {
                        count = count + S::one();
                    }
                }
                count
            }
        };
        if admissible == S::zero() {
            continue;
        }
        // Unobserved members of t contribute Γ(1 + 0) = 1 to the moments.
        let prob = assignment_prob * admissible;
        evidence = evidence + prob.clone() * dirichlet_moment::<S>(k, with_suspect.iter().copied());
        weighted = weighted + prob * dirichlet_moment::<S>(k, with_crime_stain.iter().copied());
    }
    if evidence == S::zero() {
        return Err(LrError::EmptySupport { min_k: j });
    }
    Ok(weighted / evidence)
}

/// Exact posterior mean of the suspect's type frequency. Uses the data's
/// counts when present (see [`LabelledData::canonical`] otherwise).
pub fn dirichlet_posterior_mean_exact<S: Field>(
    model: &DirichletModel<f64>,
    data: &RareMatchData,
    cfg: &OracleConfig,
) -> Result<S> {
    let m = effective_m(model).ok_or(LrError::ScaleExceeded {
        m: u64::MAX,
        n: data.n_db(),
        max_m: EXACT_MAX_M,
        max_n: EXACT_MAX_N,
    })?;
    posterior_mean_labelled(model, &LabelledData::canonical(data), m, cfg.enumeration)
}

// ---------------------------------------------------------------------------
// Monte Carlo
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub effective_sample_size: f64,
    pub samples: u64,
}

const MC_CHUNK: u64 = 1 << 16;

/// Cumulative prior table over `k` for forward sampling.
fn prior_table(model: &DirichletModel<f64>, m: u64) -> Result<(Vec<u64>, Vec<f64>)> {
    let support = model.k_prior.support().clamp(1, Some(m));
    let mut ks = Vec::new();
    let mut logs = Vec::new();
    match support {
        Support::Points(points) => {
            for k in points {
                ks.push(k);
                logs.push(model.k_prior.log_weight(k));
            }
        }
        Support::Range { min, max } => {
            let max = max.unwrap_or(m);
            let mut best = f64::NEG_INFINITY;
            let mut k = min;
            while k <= max {
                let lw = model.k_prior.log_weight(k);
                best = best.max(lw);
                if lw < best - NEGLIGIBLE {
                    break;
                }
                ks.push(k);
                logs.push(lw);
                if ks.len() > 10_000_000 {
                    return Err(LrError::Domain("prior table too large for sampling".into()));
                }
                k += 1;
            }
        }
    }
    let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut cumulative = Vec::with_capacity(logs.len());
    let mut total = 0.0;
    for lw in logs {
        total += (lw - top).exp();
        cumulative.push(total);
    }
    Ok((ks, cumulative))
}

/// Importance-sampling estimate of `E(Θ_{e_s} | E_s, B)`.
///
/// Each draw follows the generative model: `k` from the prior, a uniform
/// `k`-subset of the `m` profiles, symmetric Dirichlet(1) frequencies on it.
/// The draw is weighted by the probability of the observed database sequence
/// and suspect profile (zero unless the subset holds every required index),
/// and the self-normalized average of `θ_{e_s}` is returned together with a
/// bootstrap standard error. Chunks use independent ChaCha streams derived
/// from the seed, so results do not depend on the thread count.
pub fn dirichlet_posterior_mean_mc(
    model: &DirichletModel<f64>,
    data: &RareMatchData,
    cfg: &OracleConfig,
) -> Result<McEstimate> {
    cfg.validate()?;
    let m = effective_m(model)
        .ok_or_else(|| LrError::invalid("m", "finite for Monte Carlo sampling", "unbounded"))?;
    let labelled = LabelledData::canonical(data);
    let j = labelled.observed.len() as u64 + 1;
    if j > m {
        return Err(LrError::EmptySupport { min_k: j });
    }
    let (ks, cumulative) = prior_table(model, m)?;
    if ks.last().is_none_or(|&k| k < j) {
        return Err(LrError::EmptySupport { min_k: j });
    }
    let total_weight = *cumulative.last().expect("non-empty table");
    // observed types occupy indices 0..j-1, the suspect index j-1
    let counts: Vec<f64> = labelled.observed.iter().map(|&(_, c)| c as f64).collect();

    let chunks = cfg.mc_samples.div_ceil(MC_CHUNK);
    let per_chunk: Vec<Vec<(f64, f64)>> = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
            rng.set_stream(chunk);
            let draws = MC_CHUNK.min(cfg.mc_samples - chunk * MC_CHUNK);
            let mut kept = Vec::new();
            let mut exps = vec![0.0; j as usize];
            for _ in 0..draws {
                let u = rng.random::<f64>() * total_weight;
                let k = ks[cumulative.partition_point(|&c| c <= u).min(ks.len() - 1)];
                if k < j {
                    continue;
                }
                let subset = index::sample(&mut rng, m as usize, k as usize);
                let hits = subset.iter().filter(|&i| (i as u64) < j).count() as u64;
                if hits < j {
                    continue;
                }
                let mut total = 0.0;
                for e in exps.iter_mut() {
                    *e = Exp1.sample(&mut rng);
                    total += *e;
                }
                if k > j {
                    total += Gamma::new((k - j) as f64, 1.0).expect("positive shape").sample(&mut rng);
                }
                let ln_total = total.ln();
                let mut log_weight = 0.0;
                for (e, c) in exps.iter().zip(&counts) {
                    log_weight += c * (e.ln() - ln_total);
                }
                let theta_suspect = exps[j as usize - 1] / total;
                log_weight += theta_suspect.ln();
                kept.push((log_weight, theta_suspect));
            }
            kept
        })
        .collect();
    let kept: Vec<(f64, f64)> = per_chunk.into_iter().flatten().collect();
    if kept.is_empty() {
        return Err(LrError::DegenerateWeights {
            ess: 0.0,
            min_ess: cfg.min_ess,
        });
    }

    let top = kept.iter().map(|&(lw, _)| lw).fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = kept.iter().map(|&(lw, _)| (lw - top).exp()).collect();
    let values: Vec<f64> = kept.iter().map(|&(_, x)| x).collect();
    let sum_w: f64 = weights.iter().sum();
    let sum_w2: f64 = weights.iter().map(|w| w * w).sum();
    let ess = sum_w * sum_w / sum_w2;
    if ess < cfg.min_ess {
        return Err(LrError::DegenerateWeights {
            ess,
            min_ess: cfg.min_ess,
        });
    }
    let estimate = weights.iter().zip(&values).map(|(w, x)| w * x).sum::<f64>() / sum_w;

    // Bootstrap over all n draws. Zero-weight draws do not move the ratio,
    // so a replicate only needs how many non-zero draws it picks
    // (Binomial(n, nnz / n)) and which ones.
    let n = cfg.mc_samples;
    let nnz = kept.len();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    rng.set_stream(u64::MAX);
    let picks = Binomial::new(n, nnz as f64 / n as f64).expect("valid binomial");
    let mut replicates = Vec::with_capacity(cfg.bootstrap_replicates);
    while replicates.len() < cfg.bootstrap_replicates {
        let draws = picks.sample(&mut rng);
        let (mut num, mut den) = (0.0, 0.0);
        for _ in 0..draws {
            let i = rng.random_range(0..nnz);
            num += weights[i] * values[i];
            den += weights[i];
        }
        if den > 0.0 {
            replicates.push(num / den);
        }
    }
    let mean = replicates.iter().sum::<f64>() / replicates.len() as f64;
    let var = replicates.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (replicates.len() - 1) as f64;

    Ok(McEstimate {
        estimate,
        std_error: var.sqrt(),
        effective_sample_size: ess,
        samples: n,
    })
}
