//! Parameter grids over the models, streamed as rows and written as CSV.
//!
//! Axes nest in declaration order: the first axis varies slowest. Cells are
//! evaluated in parallel chunks, but rows always come out in that order, so
//! the CSV is the same byte for byte whatever the thread count.

use std::collections::VecDeque;
use std::fmt;
use std::io::Write;
use std::path::Path;

use indexmap::IndexMap;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::beta_binomial::{lr_full, lr_plugin, BetaParams, BinomialData};
use crate::dirichlet_multinomial::{lr_plugin_dirichlet, lr_series, DirichletModel, RareMatchData};
use crate::error::{LrError, Result};
use crate::kpriors::KPrior;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepModel {
    Beta,
    DirichletPoisson,
    DirichletNegbinomial,
}

impl SweepModel {
    fn required(self) -> &'static [&'static str] {
        match self {
            SweepModel::Beta => &["N", "b", "alpha", "beta"],
            SweepModel::DirichletPoisson => &["N", "kobs", "lambda"],
            SweepModel::DirichletNegbinomial => &["N", "kobs", "r"],
        }
    }

    fn optional(self) -> &'static [&'static str] {
        match self {
            SweepModel::Beta => &[],
            SweepModel::DirichletPoisson => &["m", "k_bar"],
            SweepModel::DirichletNegbinomial => &["lambda", "q", "m", "k_bar"],
        }
    }
}

fn is_count(name: &str) -> bool {
    matches!(name, "N" | "b" | "kobs" | "m")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Grid {
    Values(Vec<f64>),
    Linear { start: f64, stop: f64, points: usize },
    /// Geometric spacing between positive endpoints.
    Log { start: f64, stop: f64, points: usize },
}

impl Grid {
    pub fn points(&self) -> Vec<f64> {
        match *self {
            Grid::Values(ref v) => v.clone(),
            Grid::Linear { start, stop, points } => spaced(start, stop, points, |x| x, |x| x),
            Grid::Log { start, stop, points } => spaced(start, stop, points, f64::ln, f64::exp),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Grid::Values(v) => v.len(),
            Grid::Linear { points, .. } | Grid::Log { points, .. } => *points,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn validate(&self, name: &str) -> Result<()> {
        let bad = |why: &str| Err(LrError::Spec(format!("axis '{name}': {why}")));
        if self.is_empty() {
            return bad("grid is empty");
        }
        match *self {
            Grid::Values(ref v) if v.iter().any(|x| !x.is_finite()) => bad("values must be finite"),
            Grid::Linear { start, stop, .. } if !(start.is_finite() && stop.is_finite()) => {
                bad("endpoints must be finite")
            }
            Grid::Log { start, stop, .. } if !(start > 0.0 && stop > 0.0 && start.is_finite() && stop.is_finite()) => {
                bad("log endpoints must be positive and finite")
            }
            _ => Ok(()),
        }
    }
}

/// `points` values evenly spaced in `to`-space, endpoints reproduced exactly.
fn spaced(start: f64, stop: f64, points: usize, to: fn(f64) -> f64, from: fn(f64) -> f64) -> Vec<f64> {
    if points == 1 {
        return vec![start];
    }
    let (a, b) = (to(start), to(stop));
    let last = (points - 1) as f64;
    (0..points)
        .map(|i| match i {
            0 => start,
            i if i == points - 1 => stop,
            i => from(a + (b - a) * i as f64 / last),
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Output {
    Log10Lr,
    Log10LrPlugin,
    Diff,
}

impl Output {
    pub const ALL: [Output; 3] = [Output::Log10Lr, Output::Log10LrPlugin, Output::Diff];

    pub fn column(self) -> &'static str {
        match self {
            Output::Log10Lr => "log10_lr",
            Output::Log10LrPlugin => "log10_lr_plugin",
            Output::Diff => "diff",
        }
    }
}

fn all_outputs() -> Vec<Output> {
    Output::ALL.to_vec()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub model: SweepModel,
    #[serde(default)]
    pub fixed: IndexMap<String, f64>,
    #[serde(default)]
    pub axes: IndexMap<String, Grid>,
    #[serde(default = "all_outputs")]
    pub outputs: Vec<Output>,
}

impl SweepSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: SweepSpec = serde_json::from_str(text).map_err(|e| LrError::Spec(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| LrError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let known = |n: &str| self.model.required().contains(&n) || self.model.optional().contains(&n);
        for name in self.fixed.keys().chain(self.axes.keys()) {
            if !known(name) {
                return Err(LrError::Spec(format!("unknown parameter '{name}' for {:?} sweep", self.model)));
            }
        }
        for name in self.axes.keys() {
            if self.fixed.contains_key(name) {
                return Err(LrError::Spec(format!("'{name}' is both fixed and an axis")));
            }
        }
        let present = |n: &str| self.fixed.contains_key(n) || self.axes.contains_key(n);
        for name in self.model.required() {
            if !present(name) {
                return Err(LrError::Spec(format!("missing parameter '{name}'")));
            }
        }
        if self.model == SweepModel::DirichletNegbinomial && present("lambda") == present("q") {
            return Err(LrError::Spec("negative binomial sweep needs exactly one of 'lambda' or 'q'".into()));
        }
        if self.outputs.is_empty() {
            return Err(LrError::Spec("no outputs requested".into()));
        }
        for (i, o) in self.outputs.iter().enumerate() {
            if self.outputs[..i].contains(o) {
                return Err(LrError::Spec(format!("output '{}' listed twice", o.column())));
            }
        }
        for (name, grid) in &self.axes {
            grid.validate(name)?;
        }
        let mut values: Vec<(&str, f64)> = self.fixed.iter().map(|(n, &v)| (n.as_str(), v)).collect();
        for (name, grid) in &self.axes {
            values.extend(grid.points().into_iter().map(|v| (name.as_str(), v)));
        }
        for (name, v) in values {
            if !v.is_finite() {
                return Err(LrError::Spec(format!("'{name}' must be finite (got {v})")));
            }
            if is_count(name) && (v < 0.0 || v.fract() != 0.0 || v > 2f64.powi(53)) {
                return Err(LrError::Spec(format!("'{name}' must be a non-negative integer (got {v})")));
            }
        }
        Ok(())
    }

    pub fn axis_names(&self) -> Vec<&str> {
        self.axes.keys().map(String::as_str).collect()
    }

    pub fn cell_count(&self) -> u64 {
        self.axes.values().map(|g| g.len() as u64).product()
    }

    pub fn header(&self) -> Vec<String> {
        let mut cols: Vec<String> = self.axes.keys().cloned().collect();
        cols.extend(self.outputs.iter().map(|o| o.column().to_string()));
        cols.extend(["error", "terms_evaluated", "truncated"].map(String::from));
        cols
    }

    /// One spec per value of `axis`, with that value moved into `fixed`.
    pub fn sub_sweeps(&self, axis: &str) -> Result<Vec<SweepSpec>> {
        let grid = self
            .axes
            .get(axis)
            .ok_or_else(|| LrError::Spec(format!("no axis named '{axis}'")))?;
        Ok(grid
            .points()
            .into_iter()
            .map(|v| {
                let mut sub = self.clone();
                sub.axes.shift_remove(axis);
                sub.fixed.insert(axis.to_string(), v);
                sub
            })
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    /// Axis values, in axis order.
    pub point: Vec<f64>,
    pub log10_lr: Option<f64>,
    pub log10_lr_plugin: Option<f64>,
    pub error: Option<String>,
    /// Series diagnostics; absent for the closed-form beta model.
    pub terms_evaluated: Option<u64>,
    pub truncated: Option<bool>,
}

impl SweepRow {
    pub fn diff(&self) -> Option<f64> {
        Some(self.log10_lr_plugin? - self.log10_lr?)
    }

    pub fn output(&self, output: Output) -> Option<f64> {
        match output {
            Output::Log10Lr => self.log10_lr,
            Output::Log10LrPlugin => self.log10_lr_plugin,
            Output::Diff => self.diff(),
        }
    }
}

struct Cell<'a> {
    spec: &'a SweepSpec,
    point: &'a [f64],
}

impl Cell<'_> {
    fn get(&self, name: &str) -> Option<f64> {
        match self.spec.axes.get_index_of(name) {
            Some(i) => Some(self.point[i]),
            None => self.spec.fixed.get(name).copied(),
        }
    }

    fn req(&self, name: &str) -> f64 {
        self.get(name).expect("validated spec has every required parameter")
    }

    fn count(&self, name: &str) -> u64 {
        self.req(name) as u64
    }

    fn evaluate(&self) -> SweepRow {
        let mut row = SweepRow {
            point: self.point.to_vec(),
            log10_lr: None,
            log10_lr_plugin: None,
            error: None,
            terms_evaluated: None,
            truncated: None,
        };
        let outcome = match self.spec.model {
            SweepModel::Beta => self.beta(&mut row),
            SweepModel::DirichletPoisson | SweepModel::DirichletNegbinomial => self.dirichlet(&mut row),
        };
        if let Err(e) = outcome {
            row.error = Some(e.to_string());
        }
        row
    }

    fn beta(&self, row: &mut SweepRow) -> Result<()> {
        let prior = BetaParams::new(self.req("alpha"), self.req("beta"))?;
        let data = BinomialData::new(self.count("N"), self.count("b"))?;
        row.log10_lr = Some(lr_full(&prior, &data).log10_lr);
        row.log10_lr_plugin = Some(lr_plugin(&prior, &data).log10_lr);
        Ok(())
    }

    fn dirichlet(&self, row: &mut SweepRow) -> Result<()> {
        let m = self.get("m").map(|v| v as u64);
        let prior = match self.spec.model {
            SweepModel::DirichletPoisson => KPrior::poisson(self.req("lambda"), m)?,
            _ => match self.get("q") {
                Some(q) => KPrior::negbinomial(self.req("r"), q, m)?,
                None => KPrior::nb_from_mean(self.req("lambda"), self.req("r"), m)?,
            },
        };
        let data = RareMatchData::new(self.count("N"), self.count("kobs"))?;
        let k_bar = match self.get("k_bar") {
            Some(v) => v,
            None => prior.mean()?,
        };
        let plugin = lr_plugin_dirichlet(k_bar, &data, 1.0)?;
        row.log10_lr_plugin = Some(plugin.log10_lr);
        let full = lr_series(&DirichletModel::new(prior, m)?, &data)?;
        row.log10_lr = Some(full.log10_lr);
        if let Some(d) = full.diagnostics {
            row.terms_evaluated = Some(d.terms_evaluated);
            row.truncated = Some(d.truncated);
        }
        Ok(())
    }
}

const CHUNK: u64 = 256;

/// Streaming evaluation of a sweep; see [`run_sweep`].
pub struct SweepRun<'a> {
    spec: &'a SweepSpec,
    grids: Vec<Vec<f64>>,
    next: u64,
    total: u64,
    buffer: VecDeque<SweepRow>,
}

impl SweepRun<'_> {
    pub fn total(&self) -> u64 {
        self.total
    }

    fn point(&self, mut index: u64) -> Vec<f64> {
        let mut point = vec![0.0; self.grids.len()];
        for (slot, grid) in point.iter_mut().zip(&self.grids).rev() {
            let n = grid.len() as u64;
            *slot = grid[(index % n) as usize];
            index /= n;
        }
        point
    }
}

impl Iterator for SweepRun<'_> {
    type Item = SweepRow;

    fn next(&mut self) -> Option<SweepRow> {
        if self.buffer.is_empty() && self.next < self.total {
            let end = (self.next + CHUNK).min(self.total);
            let points: Vec<Vec<f64>> = (self.next..end).map(|i| self.point(i)).collect();
            let spec = self.spec;
            let rows: Vec<SweepRow> = points
                .par_iter()
                .map(|p| Cell { spec, point: p }.evaluate())
                .collect();
            self.buffer.extend(rows);
            self.next = end;
        }
        self.buffer.pop_front()
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = (self.total - self.next) as usize + self.buffer.len();
        (left, Some(left))
    }
}

/// Rows over the Cartesian product of the axes, first axis outermost. Cells
/// whose parameters the model rejects come back as rows carrying `error`.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepRun<'_>> {
    spec.validate()?;
    Ok(SweepRun {
        spec,
        grids: spec.axes.values().map(Grid::points).collect(),
        next: 0,
        total: spec.cell_count(),
        buffer: VecDeque::new(),
    })
}

fn number(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes header and rows; returns the number of data rows.
pub fn write_csv<W: Write>(spec: &SweepSpec, rows: impl IntoIterator<Item = SweepRow>, out: W) -> Result<u64> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    let csv_err = |e: csv::Error| LrError::Io(e.to_string());
    w.write_record(spec.header()).map_err(csv_err)?;
    let mut n = 0;
    for row in rows {
        let mut record: Vec<String> = row.point.iter().map(|&v| number(v)).collect();
        record.extend(spec.outputs.iter().map(|&o| row.output(o).map(number).unwrap_or_default()));
        record.push(row.error.clone().unwrap_or_default());
        record.push(row.terms_evaluated.map(|t| t.to_string()).unwrap_or_default());
        record.push(row.truncated.map(|t| t.to_string()).unwrap_or_default());
        w.write_record(&record).map_err(csv_err)?;
        n += 1;
    }
    w.flush()?;
    Ok(n)
}

/// Runs the sweep straight into CSV.
pub fn sweep_to_csv<W: Write>(spec: &SweepSpec, out: W) -> Result<u64> {
    write_csv(spec, run_sweep(spec)?, out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Figure {
    Fig5,
    Fig6,
    Table3,
}

impl Figure {
    pub const ALL: [Figure; 3] = [Figure::Fig5, Figure::Fig6, Figure::Table3];

    pub fn name(self) -> &'static str {
        match self {
            Figure::Fig5 => "fig5",
            Figure::Fig6 => "fig6",
            Figure::Table3 => "table3",
        }
    }
}

impl fmt::Display for Figure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Figure {
    type Err = LrError;

    fn from_str(s: &str) -> Result<Self> {
        Figure::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| LrError::UnknownFigure(s.to_string()))
    }
}

/// Points on each λ axis of the Dirichlet figures.
pub const LAMBDA_POINTS: usize = 200;
/// Points on the α axis of the beta figure; α runs from `ALPHA_MIN` to 20.
pub const ALPHA_POINTS: usize = 200;
pub const ALPHA_MIN: f64 = 0.01;

fn kobs_axis() -> Grid {
    Grid::Values((3..=10).map(|i| f64::from(i) * 10.0).collect())
}

fn lambda_axis() -> Grid {
    Grid::Log {
        start: 1.0,
        stop: 1e4,
        points: LAMBDA_POINTS,
    }
}

/// The grids behind the published sensitivity plots.
///
/// `table3` is a single spec with the shape parameter `r` as its outermost
/// axis; [`SweepSpec::sub_sweeps`] on `"r"` gives the four per-row sweeps.
pub fn builtin_figure(figure: Figure) -> SweepSpec {
    let fixed_n = IndexMap::from([("N".to_string(), 100.0)]);
    match figure {
        Figure::Fig5 => SweepSpec {
            model: SweepModel::Beta,
            fixed: IndexMap::from([("N".to_string(), 100.0), ("b".to_string(), 0.0)]),
            axes: IndexMap::from([
                ("beta".to_string(), Grid::Values(vec![1.0, 5.0, 10.0, 15.0, 20.0])),
                (
                    "alpha".to_string(),
                    Grid::Log {
                        start: ALPHA_MIN,
                        stop: 20.0,
                        points: ALPHA_POINTS,
                    },
                ),
            ]),
            outputs: all_outputs(),
        },
        Figure::Fig6 => SweepSpec {
            model: SweepModel::DirichletPoisson,
            fixed: fixed_n,
            axes: IndexMap::from([("kobs".to_string(), kobs_axis()), ("lambda".to_string(), lambda_axis())]),
            outputs: all_outputs(),
        },
        Figure::Table3 => SweepSpec {
            model: SweepModel::DirichletNegbinomial,
            fixed: fixed_n,
            axes: IndexMap::from([
                ("r".to_string(), Grid::Values(vec![1.0, 10.0, 100.0, 1000.0])),
                ("kobs".to_string(), kobs_axis()),
                ("lambda".to_string(), lambda_axis()),
            ]),
            outputs: all_outputs(),
        },
    }
}

pub fn builtin_figure_by_name(name: &str) -> Result<SweepSpec> {
    Ok(builtin_figure(name.parse()?))
}
