//! Likelihood ratios for the rare type match problem.
//!
//! Two models of how DNA profile frequencies arise:
//!
//! * [`beta_binomial`]: a single unknown frequency with a Beta prior, giving
//!   closed forms for the full-Bayes and plug-in ratios.
//! * [`dirichlet_multinomial`]: a random number of types `K` with prior
//!   [`kpriors::KPrior`], frequencies Dirichlet(1) given `K`. The full-Bayes
//!   ratio is a one-dimensional series in `k` that depends on the data only
//!   through `N` and `k_obs`.
//!
//! The model code is generic over the scalar ([`scalar::Real`] for `f32`
//! and `f64`, [`scalar::Field`] where exact rationals make sense). The
//! aliases below fix the scalar for the common cases.

pub mod beta_binomial;
pub mod dirichlet_multinomial;
pub mod error;
pub mod kpriors;
pub mod numerics;
pub mod oracles;
pub mod result;
pub mod scalar;
pub mod sweep;

pub use beta_binomial::{BetaParams, BinomialData};
pub use dirichlet_multinomial::{DirichletModel, RareMatchData};
pub use error::{LrError, Result};
pub use kpriors::KPrior;
pub use numerics::{SeriesConfig, SeriesDiagnostics};
pub use oracles::OracleConfig;
pub use result::{LrResult, Method, ModelTag};
pub use scalar::{Field, Real};
pub use sweep::{SweepRow, SweepSpec};

/// Exact rational scalar for the closed forms and the enumeration oracle.
pub type ExactRational = num_rational::BigRational;

pub type BetaParamsF64 = BetaParams<f64>;
pub type BetaParamsF32 = BetaParams<f32>;
pub type BetaParamsExact = BetaParams<ExactRational>;
pub type KPriorF64 = KPrior<f64>;
pub type KPriorF32 = KPrior<f32>;
pub type DirichletModelF64 = DirichletModel<f64>;
pub type DirichletModelF32 = DirichletModel<f32>;
pub type LrResultF64 = LrResult<f64>;
pub type LrResultF32 = LrResult<f32>;
pub type SeriesConfigF64 = SeriesConfig<f64>;
