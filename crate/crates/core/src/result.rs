use serde::{Deserialize, Serialize};

use crate::numerics::SeriesDiagnostics;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    FullBayes,
    Plugin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelTag {
    BetaBinomial,
    DirichletMultinomial,
}

/// A likelihood ratio together with how it was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LrResult<T> {
    pub lr: T,
    pub log10_lr: T,
    pub method: Method,
    pub model: ModelTag,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub diagnostics: Option<SeriesDiagnostics<T>>,
}

impl<T: Real> LrResult<T> {
    pub fn from_value(lr: T, method: Method, model: ModelTag) -> Self {
        Self {
            lr,
            log10_lr: lr.log10(),
            method,
            model,
            diagnostics: None,
        }
    }

    /// Builds the result from `ln LR`, never materializing a larger quantity.
    pub fn from_ln(ln_lr: T, method: Method, model: ModelTag) -> Self {
        Self {
            lr: ln_lr.exp(),
            log10_lr: ln_lr / T::LN_10(),
            method,
            model,
            diagnostics: None,
        }
    }

    pub fn with_diagnostics(mut self, diagnostics: SeriesDiagnostics<T>) -> Self {
        self.diagnostics = Some(diagnostics);
        self
    }
}
