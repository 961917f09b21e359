//! Batch ERM tuning over hyperparameter grids.
//!
//! Means over instances use pairwise summation of per-instance values taken
//! in instance order, so results do not depend on the thread count.

use std::collections::{BinaryHeap, HashMap};
use std::sync::atomic::{AtomicUsize, Ordering as AtomicOrdering};
use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{family_params, family_report, generalization_gap, pdim_piecewise, BoundReport, Family};
use crate::error::{Error, Result};
use crate::instances::{derive_seed, GeneratorSpec, Instance, Simplex};
use crate::linkage::{clustering_utility_with, enumerate_boundaries_m1, MergeFamily, PruneObjective, ENUMERATION_MAX_N};
use crate::logreg::{approx_path, knots, logistic_loss, solve_rlr, Penalty, RegPath, DEFAULT_DELTA_DROP};
use crate::numerics::{linspace, logspace, order_independent_mean};
use crate::param::ParamPoint;
use crate::ssl::ssl_loss;

/// Candidate gaps above this count make the exact M1 mode refuse.
pub const EXACT_MAX_CANDIDATES: usize = 200_000;
/// Refinement never splits intervals narrower than this.
pub const REFINE_MIN_WIDTH: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
pub enum Task {
    #[serde(rename = "clustering-M1")]
    #[value(name = "clustering-M1")]
    ClusteringM1,
    #[serde(rename = "clustering-M2")]
    #[value(name = "clustering-M2")]
    ClusteringM2,
    #[serde(rename = "clustering-M3")]
    #[value(name = "clustering-M3")]
    ClusteringM3,
    #[serde(rename = "ssl")]
    #[value(name = "ssl")]
    Ssl,
    #[serde(rename = "logreg")]
    #[value(name = "logreg")]
    Logreg,
}

impl Task {
    pub fn label(self) -> &'static str {
        match self {
            Task::ClusteringM1 => "clustering-M1",
            Task::ClusteringM2 => "clustering-M2",
            Task::ClusteringM3 => "clustering-M3",
            Task::Ssl => "ssl",
            Task::Logreg => "logreg",
        }
    }

    pub fn sense(self) -> Sense {
        match self {
            Task::Logreg => Sense::Minimize,
            _ => Sense::Maximize,
        }
    }

    fn instance_kind(self) -> &'static str {
        match self {
            Task::ClusteringM1 | Task::ClusteringM2 | Task::ClusteringM3 => "clustering",
            Task::Ssl => "ssl",
            Task::Logreg => "logreg",
        }
    }

    /// Cataloged structure family, if any.
    pub fn family(self) -> Option<Family> {
        match self {
            Task::ClusteringM1 => Some(Family::H1),
            Task::ClusteringM2 => Some(Family::H2),
            Task::ClusteringM3 => Some(Family::H3),
            Task::Ssl => Some(Family::G),
            Task::Logreg => None,
        }
    }
}

/// Whether larger or smaller mean values are better.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sense {
    Maximize,
    Minimize,
}

impl Sense {
    /// Strictly better.
    pub fn better(self, a: f64, b: f64) -> bool {
        match self {
            Sense::Maximize => a > b,
            Sense::Minimize => a < b,
        }
    }
}

/// Which validation loss the logreg task scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LogRegLoss {
    /// Validation loss of the piecewise-linear coefficient path.
    #[default]
    PathSurrogate,
    /// Validation loss of the exact minimizer at each λ.
    Exact,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LogRegSettings {
    pub penalty: Penalty,
    pub eps: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub loss: LogRegLoss,
    pub delta_drop: f64,
}

impl Default for LogRegSettings {
    fn default() -> Self {
        LogRegSettings {
            penalty: Penalty::L2,
            eps: 0.05,
            lambda_min: 0.1,
            lambda_max: 1.1,
            loss: LogRegLoss::PathSurrogate,
            delta_drop: DEFAULT_DELTA_DROP,
        }
    }
}

impl LogRegSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda_min > 0.0 && self.lambda_min < self.lambda_max && self.lambda_max.is_finite()) {
            return Err(Error::invalid(
                "logreg.lambda_min/lambda_max",
                format!("need 0 < lambda_min < lambda_max < inf, got ({}, {})", self.lambda_min, self.lambda_max),
            ));
        }
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(Error::invalid("logreg.eps", format!("must be positive, got {}", self.eps)));
        }
        Ok(())
    }
}

/// One grid axis: `points` values from `lo` to `hi` inclusive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
    #[serde(default)]
    pub log: bool,
}

impl Axis {
    pub fn values(&self, name: &str) -> Result<Vec<f64>> {
        if self.points == 0 {
            return Err(Error::invalid(format!("{name}.points"), "must be at least 1"));
        }
        if !(self.lo.is_finite() && self.hi.is_finite() && self.lo <= self.hi) {
            return Err(Error::invalid(name, format!("need finite lo <= hi, got ({}, {})", self.lo, self.hi)));
        }
        if self.log {
            if self.lo <= 0.0 {
                return Err(Error::invalid(format!("{name}.lo"), "log spacing needs lo > 0"));
            }
            Ok(logspace(self.lo, self.hi, self.points))
        } else {
            Ok(linspace(self.lo, self.hi, self.points))
        }
    }
}

fn default_true() -> bool {
    true
}

fn default_subdivisions() -> usize {
    10
}

/// Grid description; every field has a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    /// Magnitudes of the scalar linkage exponent (default log-spaced `[0.05, 20]`, 50 points).
    #[serde(default)]
    pub alpha: Option<Axis>,
    /// Mirror the magnitudes to negative exponents.
    #[serde(default = "default_true")]
    pub negative_alpha: bool,
    /// Add `±inf` (signed as `negative_alpha` allows).
    #[serde(default = "default_true")]
    pub infinite_alpha: bool,
    /// Simplex lattice resolution for `β`.
    #[serde(default = "default_subdivisions")]
    pub beta_subdivisions: usize,
    /// Fixed `β` instead of the lattice.
    #[serde(default)]
    pub beta: Option<Simplex>,
    /// Per-coordinate exponent values for M3; the grid is their product.
    #[serde(default)]
    pub m3_alpha: Option<Vec<f64>>,
    /// RBF bandwidth (default log-spaced `[0.01, 10]`, 20 points).
    #[serde(default)]
    pub sigma: Option<Axis>,
    /// Regularization strength (default: the path knots `λ_min + tε`).
    #[serde(default)]
    pub lambda: Option<Axis>,
    /// Explicit points; overrides every other field.
    #[serde(default)]
    pub points: Option<Vec<ParamPoint>>,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            alpha: None,
            negative_alpha: true,
            infinite_alpha: true,
            beta_subdivisions: 10,
            beta: None,
            m3_alpha: None,
            sigma: None,
            lambda: None,
            points: None,
        }
    }
}

/// Largest `L` for which the default `β` lattice is used.
pub const LATTICE_MAX_L: usize = 3;

fn default_alpha_axis() -> Axis {
    Axis { lo: 0.05, hi: 20.0, points: 50, log: true }
}

fn default_sigma_axis() -> Axis {
    Axis { lo: 0.01, hi: 10.0, points: 20, log: true }
}

/// Sorted, deduplicated default scalar exponents for `spec`.
pub fn alpha_values(spec: &GridSpec) -> Result<Vec<f64>> {
    let mags = spec.alpha.clone().unwrap_or_else(default_alpha_axis).values("grid.alpha")?;
    if mags.iter().any(|&a| a <= 0.0) {
        return Err(Error::invalid("grid.alpha.lo", "exponent magnitudes must be positive"));
    }
    let mut out: Vec<f64> = mags.clone();
    if spec.negative_alpha {
        out.extend(mags.iter().map(|a| -a));
    }
    if spec.infinite_alpha {
        out.push(f64::INFINITY);
        if spec.negative_alpha {
            out.push(f64::NEG_INFINITY);
        }
    }
    out.sort_by(f64::total_cmp);
    out.dedup();
    for &a in &out {
        crate::linkage::merge::check_scalar_alpha(a).map_err(|e| relabel(e, "grid.alpha"))?;
    }
    Ok(out)
}

fn relabel(e: Error, field: &str) -> Error {
    match e {
        Error::InvalidInput { reason, .. } => Error::invalid(field, reason),
        other => other,
    }
}

fn betas(spec: &GridSpec, l: usize) -> Result<Vec<Simplex>> {
    if let Some(b) = &spec.beta {
        if b.len() != l {
            return Err(Error::invalid("grid.beta", format!("length {} but instances have L = {l}", b.len())));
        }
        return Ok(vec![b.clone()]);
    }
    if l == 1 {
        return Ok(vec![Simplex::uniform(1)]);
    }
    if l > LATTICE_MAX_L {
        return Err(Error::invalid(
            "grid.beta",
            format!("no default lattice for L = {l} > {LATTICE_MAX_L}; give a fixed beta"),
        ));
    }
    if spec.beta_subdivisions == 0 {
        return Err(Error::invalid("grid.beta_subdivisions", "must be at least 1"));
    }
    Ok(Simplex::lattice(l, spec.beta_subdivisions))
}

/// Materializes the grid for `task` with `l` metrics.
pub fn build_grid(task: Task, spec: &GridSpec, l: usize, logreg: &LogRegSettings) -> Result<Vec<ParamPoint>> {
    if let Some(points) = &spec.points {
        if points.is_empty() {
            return Err(Error::invalid("grid.points", "must not be empty"));
        }
        for p in points {
            p.validate().map_err(|e| relabel(e, "grid.points"))?;
            check_kind(task, p, l)?;
        }
        return Ok(points.clone());
    }
    let grid = match task {
        Task::ClusteringM1 | Task::ClusteringM2 => {
            let alphas = alpha_values(spec)?;
            let mut out = Vec::new();
            for beta in betas(spec, l)? {
                for &alpha in &alphas {
                    out.push(ParamPoint::LinkageScalar { alpha, beta: beta.clone() });
                }
            }
            out
        }
        Task::ClusteringM3 => {
            let values = spec.m3_alpha.clone().unwrap_or_else(|| vec![0.25, 0.5, 1.0, 2.0, 4.0]);
            if values.is_empty() {
                return Err(Error::invalid("grid.m3_alpha", "must not be empty"));
            }
            let count = values.len().checked_pow(l as u32).filter(|&c| c <= 1_000_000);
            if count.is_none() {
                return Err(Error::invalid("grid.m3_alpha", format!("{}^{l} grid points is too many", values.len())));
            }
            let mut out = Vec::new();
            let mut idx = vec![0usize; l];
            loop {
                let alpha: Vec<f64> = idx.iter().map(|&i| values[i]).collect();
                if (MergeFamily::Geometric { alpha: alpha.clone() }).validate().is_ok() {
                    out.push(ParamPoint::LinkageVector { alpha });
                }
                let mut pos = l;
                loop {
                    if pos == 0 {
                        return finish(out);
                    }
                    pos -= 1;
                    idx[pos] += 1;
                    if idx[pos] < values.len() {
                        break;
                    }
                    idx[pos] = 0;
                }
            }
        }
        Task::Ssl => {
            let sigmas = spec.sigma.clone().unwrap_or_else(default_sigma_axis).values("grid.sigma")?;
            if sigmas.iter().any(|&s| s <= 0.0) {
                return Err(Error::invalid("grid.sigma.lo", "sigma must be positive"));
            }
            let mut out = Vec::new();
            for beta in betas(spec, l)? {
                for &sigma in &sigmas {
                    out.push(ParamPoint::Ssl { sigma, beta: beta.clone() });
                }
            }
            out
        }
        Task::Logreg => {
            logreg.validate()?;
            let lambdas = match &spec.lambda {
                Some(axis) => axis.values("grid.lambda")?,
                None => knots(logreg.eps, logreg.lambda_min, logreg.lambda_max),
            };
            let tol = 1e-12 * logreg.lambda_max;
            if let Some(&bad) = lambdas
                .iter()
                .find(|&&v| v < logreg.lambda_min - tol || v > logreg.lambda_max + tol)
            {
                return Err(Error::invalid(
                    "grid.lambda",
                    format!("{bad} lies outside [{}, {}]", logreg.lambda_min, logreg.lambda_max),
                ));
            }
            lambdas
                .into_iter()
                .map(|v| ParamPoint::LogReg { lambda: v.clamp(logreg.lambda_min, logreg.lambda_max) })
                .collect()
        }
    };
    finish(grid)
}

fn finish(grid: Vec<ParamPoint>) -> Result<Vec<ParamPoint>> {
    if grid.is_empty() {
        return Err(Error::invalid("grid", "no valid points"));
    }
    Ok(grid)
}

fn check_kind(task: Task, p: &ParamPoint, l: usize) -> Result<()> {
    let ok = match (task, p) {
        (Task::ClusteringM1 | Task::ClusteringM2, ParamPoint::LinkageScalar { beta, .. }) => beta.len() == l,
        (Task::ClusteringM3, ParamPoint::LinkageVector { alpha }) => alpha.len() == l,
        (Task::Ssl, ParamPoint::Ssl { beta, .. }) => beta.len() == l,
        (Task::Logreg, ParamPoint::LogReg { .. }) => true,
        _ => false,
    };
    if ok {
        Ok(())
    } else {
        Err(Error::invalid("grid.points", format!("{p} does not fit task {} with L = {l}", task.label())))
    }
}

/// Where ERM searches.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "mode", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SearchMode {
    #[default]
    Grid,
    /// Adaptive bisection over one scalar coordinate (α, σ or λ) with `β` fixed.
    Refine {
        lo: f64,
        hi: f64,
        budget: usize,
        #[serde(default)]
        beta: Option<Simplex>,
    },
    /// Every gap between M1 boundaries (`L = 1`, `n <= 12`, `α > 0`).
    ExactM1 { lo: f64, hi: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TuneConfig {
    pub task: Task,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub search: SearchMode,
    #[serde(default)]
    pub objective: PruneObjective,
    #[serde(default)]
    pub logreg: LogRegSettings,
    /// Confidence level of the attached generalization gap.
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_delta() -> f64 {
    0.05
}

impl TuneConfig {
    pub fn new(task: Task) -> Self {
        TuneConfig {
            task,
            grid: GridSpec::default(),
            search: SearchMode::Grid,
            objective: PruneObjective::default(),
            logreg: LogRegSettings::default(),
            delta: default_delta(),
            seed: 0,
        }
    }
}

/// Mean value of one parameter over the training instances.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridRow {
    pub param: ParamPoint,
    pub mean: f64,
    pub per_instance: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TuneResult {
    pub task: Task,
    pub sense: Sense,
    /// `grid`, `refine` or `exact-m1`.
    pub mode: String,
    pub best_param: ParamPoint,
    pub train_utility: f64,
    pub holdout_utility: Option<f64>,
    pub utility_table: Vec<GridRow>,
    pub n_instances: usize,
    pub bound_report: Option<BoundReport>,
    pub notes: Vec<String>,
}

/// Shape shared by every instance of a batch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Shape {
    pub n: usize,
    pub l: usize,
    pub unlabeled: usize,
}

fn shape_of(inst: &Instance) -> Shape {
    match inst {
        Instance::Clustering(c) => Shape { n: c.n(), l: c.num_metrics(), unlabeled: 0 },
        Instance::Ssl(s) => Shape { n: s.n(), l: s.num_metrics(), unlabeled: s.unlabeled.len() },
        Instance::LogReg(r) => Shape { n: r.x.nrows(), l: r.p(), unlabeled: 0 },
    }
}

/// Checks task kind and `L` agreement; returns the common shape when `n` is uniform too.
pub fn batch_shape(instances: &[Instance], task: Task) -> Result<(usize, Option<Shape>)> {
    let first = instances
        .first()
        .ok_or_else(|| Error::invalid("instances", "need at least one instance"))?;
    let s0 = shape_of(first);
    let mut uniform = true;
    for (i, inst) in instances.iter().enumerate() {
        if inst.task_name() != task.instance_kind() {
            return Err(Error::invalid(
                format!("instances[{i}]"),
                format!("is a {} instance but the task is {}", inst.task_name(), task.label()),
            ));
        }
        let s = shape_of(inst);
        if s.l != s0.l {
            return Err(Error::invalid(
                format!("instances[{i}]"),
                format!("has {} metrics/features, instance 0 has {}", s.l, s0.l),
            ));
        }
        uniform &= s == s0;
    }
    Ok((s0.l, uniform.then_some(s0)))
}

/// Per-instance evaluation with a bit-exact cache keyed by `(instance index, parameter bits)`.
pub struct Evaluator<'a> {
    instances: &'a [Instance],
    task: Task,
    objective: PruneObjective,
    logreg: LogRegSettings,
    paths: Vec<Option<RegPath>>,
    cache: Mutex<HashMap<(usize, Vec<u64>), f64>>,
    computed: AtomicUsize,
}

impl<'a> Evaluator<'a> {
    pub fn new(instances: &'a [Instance], config: &TuneConfig) -> Result<Self> {
        batch_shape(instances, config.task)?;
        let paths = if config.task == Task::Logreg && config.logreg.loss == LogRegLoss::PathSurrogate {
            config.logreg.validate()?;
            let s = &config.logreg;
            instances
                .par_iter()
                .map(|inst| match inst {
                    Instance::LogReg(r) => {
                        approx_path(r, s.eps, s.lambda_min, s.lambda_max, s.penalty, s.delta_drop).map(Some)
                    }
                    _ => unreachable!("checked by batch_shape"),
                })
                .collect::<Result<Vec<_>>>()?
        } else {
            vec![None; instances.len()]
        };
        Ok(Evaluator {
            instances,
            task: config.task,
            objective: config.objective,
            logreg: config.logreg.clone(),
            paths,
            cache: Mutex::new(HashMap::new()),
            computed: AtomicUsize::new(0),
        })
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn task(&self) -> Task {
        self.task
    }

    /// Number of uncached evaluations so far.
    pub fn computed(&self) -> usize {
        self.computed.load(AtomicOrdering::Relaxed)
    }

    pub fn value(&self, idx: usize, param: &ParamPoint) -> Result<f64> {
        let key = (idx, param.key());
        if let Some(&v) = self.cache.lock().expect("cache lock").get(&key) {
            return Ok(v);
        }
        let v = self.compute(idx, param)?;
        self.computed.fetch_add(1, AtomicOrdering::Relaxed);
        self.cache.lock().expect("cache lock").insert(key, v);
        Ok(v)
    }

    /// Evaluation bypassing the cache.
    pub fn compute(&self, idx: usize, param: &ParamPoint) -> Result<f64> {
        let inst = &self.instances[idx];
        match (self.task, param, inst) {
            (Task::ClusteringM1, ParamPoint::LinkageScalar { alpha, beta }, Instance::Clustering(c)) => {
                clustering_utility_with(c, &MergeFamily::MinMax { alpha: *alpha }, beta, self.objective)
            }
            (Task::ClusteringM2, ParamPoint::LinkageScalar { alpha, beta }, Instance::Clustering(c)) => {
                clustering_utility_with(c, &MergeFamily::PowerMean { alpha: *alpha }, beta, self.objective)
            }
            (Task::ClusteringM3, ParamPoint::LinkageVector { alpha }, Instance::Clustering(c)) => clustering_utility_with(
                c,
                &MergeFamily::Geometric { alpha: alpha.clone() },
                &Simplex::uniform(c.num_metrics()),
                self.objective,
            ),
            (Task::Ssl, ParamPoint::Ssl { sigma, beta }, Instance::Ssl(s)) => Ok(1.0 - ssl_loss(s, *sigma, beta)?),
            (Task::Logreg, ParamPoint::LogReg { lambda }, Instance::LogReg(r)) => match &self.paths[idx] {
                Some(path) => {
                    let beta = path.eval(*lambda)?;
                    Ok(logistic_loss(&beta, &r.x_val, &r.y_val))
                }
                None => {
                    let beta = solve_rlr(&r.x, &r.y, *lambda, self.logreg.penalty)?;
                    Ok(logistic_loss(&beta, &r.x_val, &r.y_val))
                }
            },
            _ => Err(Error::invalid("param", format!("{param} does not fit task {}", self.task.label()))),
        }
    }

    /// Per-instance values in instance order.
    pub fn row(&self, param: &ParamPoint) -> Result<Vec<f64>> {
        (0..self.instances.len()).map(|i| self.value(i, param)).collect()
    }

    pub fn mean(&self, param: &ParamPoint) -> Result<f64> {
        Ok(order_independent_mean(&self.row(param)?))
    }

    /// Rows for every point, evaluated in parallel over points.
    pub fn table(&self, grid: &[ParamPoint]) -> Result<Vec<GridRow>> {
        grid.par_iter()
            .map(|p| {
                let per_instance = self.row(p)?;
                Ok(GridRow {
                    param: p.clone(),
                    mean: order_independent_mean(&per_instance),
                    per_instance,
                })
            })
            .collect()
    }
}

/// Index of the best row; ties go to the lexicographically smallest parameter.
pub fn select_best(rows: &[GridRow], sense: Sense) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, r) in rows.iter().enumerate() {
        best = match best {
            None => Some(i),
            Some(b) => {
                let rb = &rows[b];
                let wins = sense.better(r.mean, rb.mean)
                    || (r.mean == rb.mean && r.param.lex_cmp(&rb.param) == std::cmp::Ordering::Less);
                Some(if wins { i } else { b })
            }
        };
    }
    best
}

fn bound_for(task: Task, shape: Option<Shape>) -> Option<BoundReport> {
    let (family, s) = (task.family()?, shape?);
    let unlabeled = (family == Family::G).then_some(s.unlabeled as u64);
    family_report(family, s.n as u64, s.l as u64, unlabeled).ok()
}

/// Cataloged pseudo-dimension bound for the task at shape `(n, L)`.
pub fn task_pdim(task: Task, n: usize, l: usize, unlabeled: Option<usize>) -> Result<f64> {
    let family = task
        .family()
        .ok_or_else(|| Error::invalid("task", format!("{} has no cataloged family", task.label())))?;
    let fp = family_params(family, n as u64, l as u64, unlabeled.map(|u| u as u64))?;
    let p = &fp.params;
    pdim_piecewise(p.d, p.q, p.m, p.delta, &p.k_f, &p.k_g)
}

/// ERM over the configured search space.
pub fn erm_tune(instances: &[Instance], config: &TuneConfig) -> Result<TuneResult> {
    let (l, shape) = batch_shape(instances, config.task)?;
    let ev = Evaluator::new(instances, config)?;
    let (mode, rows, mut notes) = match &config.search {
        SearchMode::Grid => {
            let grid = build_grid(config.task, &config.grid, l, &config.logreg)?;
            ("grid", ev.table(&grid)?, vec![])
        }
        SearchMode::Refine { lo, hi, budget, beta } => {
            let beta = beta.clone().unwrap_or_else(|| Simplex::uniform(l));
            if beta.len() != l && config.task != Task::Logreg {
                return Err(Error::invalid("search.beta", format!("length {} but L = {l}", beta.len())));
            }
            let make = scalar_param(config.task, beta)?;
            let r = refine_1d(&ev, &make, *lo, *hi, *budget)?;
            let rows = r
                .samples
                .iter()
                .map(|&(x, _)| {
                    let p = make(x);
                    let per_instance = ev.row(&p)?;
                    Ok(GridRow { param: p, mean: order_independent_mean(&per_instance), per_instance })
                })
                .collect::<Result<Vec<_>>>()?;
            ("refine", rows, vec![format!("adaptive refinement, {} evaluations", r.evaluations)])
        }
        SearchMode::ExactM1 { lo, hi } => {
            if config.task != Task::ClusteringM1 || l != 1 {
                return Err(Error::invalid("search.mode", "exact-m1 needs task clustering-M1 with L = 1"));
            }
            let candidates = exact_m1_candidates(instances, *lo, *hi)?;
            let grid: Vec<ParamPoint> = candidates
                .into_iter()
                .map(|alpha| ParamPoint::LinkageScalar { alpha, beta: Simplex::uniform(1) })
                .collect();
            let n = grid.len();
            ("exact-m1", ev.table(&grid)?, vec![format!("one evaluation per boundary gap, {n} gaps")])
        }
    };
    let sense = config.task.sense();
    let best = select_best(&rows, sense).ok_or_else(|| Error::invalid("grid", "no points evaluated"))?;
    let bound_report = bound_for(config.task, shape);
    if bound_report.is_none() && config.task.family().is_some() {
        notes.push("no bound attached: instance sizes differ".into());
    }
    Ok(TuneResult {
        task: config.task,
        sense,
        mode: mode.into(),
        best_param: rows[best].param.clone(),
        train_utility: rows[best].mean,
        holdout_utility: None,
        n_instances: instances.len(),
        utility_table: rows,
        bound_report,
        notes,
    })
}

/// Mean of `param` over held-out instances, using the same settings.
pub fn holdout_value(instances: &[Instance], config: &TuneConfig, param: &ParamPoint) -> Result<f64> {
    Evaluator::new(instances, config)?.mean(param)
}

/// Maps a scalar coordinate to the task's parameter with everything else fixed.
pub fn scalar_param(task: Task, beta: Simplex) -> Result<Box<dyn Fn(f64) -> ParamPoint + Send + Sync>> {
    Ok(match task {
        Task::ClusteringM1 | Task::ClusteringM2 => {
            Box::new(move |alpha| ParamPoint::LinkageScalar { alpha, beta: beta.clone() })
        }
        Task::Ssl => Box::new(move |sigma| ParamPoint::Ssl { sigma, beta: beta.clone() }),
        Task::Logreg => Box::new(|lambda| ParamPoint::LogReg { lambda }),
        Task::ClusteringM3 => {
            return Err(Error::invalid("task", "refinement needs a scalar parameter; M3 is vector-valued"))
        }
    })
}

/// Interior midpoints of every gap between the pooled M1 boundaries on `(lo, hi)`.
pub fn exact_m1_candidates(instances: &[Instance], lo: f64, hi: f64) -> Result<Vec<f64>> {
    let beta = Simplex::uniform(1);
    let mut roots = Vec::new();
    for (i, inst) in instances.iter().enumerate() {
        let Instance::Clustering(c) = inst else {
            return Err(Error::invalid(format!("instances[{i}]"), "not a clustering instance"));
        };
        if c.num_metrics() != 1 {
            return Err(Error::invalid(format!("instances[{i}]"), "exact mode needs L = 1"));
        }
        if c.n() > ENUMERATION_MAX_N {
            return Err(Error::invalid(
                format!("instances[{i}]"),
                format!("exact mode needs n <= {ENUMERATION_MAX_N}, got {}", c.n()),
            ));
        }
        roots.extend(enumerate_boundaries_m1(c, &beta, lo, hi)?);
        if roots.len() > EXACT_MAX_CANDIDATES {
            return Err(Error::GuardExceeded {
                what: "exact M1 candidate gaps".into(),
                estimate: (roots.len() * instances.len() / (i + 1)) as f64,
                limit: EXACT_MAX_CANDIDATES as f64,
            });
        }
    }
    roots.sort_by(f64::total_cmp);
    roots.dedup();
    let mut edges = vec![lo];
    edges.extend(roots);
    edges.push(hi);
    Ok(edges
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| 0.5 * (w[0] + w[1]))
        .collect())
}

/// A run of equal consecutive samples.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Plateau {
    pub lo: f64,
    pub hi: f64,
    pub value: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RefineResult {
    /// `(x, mean)` sorted by `x`.
    pub samples: Vec<(f64, f64)>,
    pub best_x: f64,
    pub best_value: f64,
    pub evaluations: usize,
    pub plateaus: Vec<Plateau>,
}

#[derive(PartialEq)]
struct Pending {
    width: f64,
    lo: f64,
    hi: f64,
}

impl Eq for Pending {}

impl Ord for Pending {
    // widest first, then leftmost
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.width
            .total_cmp(&other.width)
            .then_with(|| other.lo.total_cmp(&self.lo))
    }
}

impl PartialOrd for Pending {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// Adaptive bisection of a piecewise-constant mean over `[lo, hi]`.
///
/// Samples both ends and the midpoint, then repeatedly halves the widest
/// interval whose end values differ, until `budget` mean evaluations are spent
/// or every such interval is narrower than [`REFINE_MIN_WIDTH`].
pub fn refine_1d(
    ev: &Evaluator<'_>,
    make: &(dyn Fn(f64) -> ParamPoint + Send + Sync),
    lo: f64,
    hi: f64,
    budget: usize,
) -> Result<RefineResult> {
    if budget < 3 {
        return Err(Error::invalid("budget", format!("must be at least 3, got {budget}")));
    }
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::invalid("lo/hi", format!("need finite lo < hi, got ({lo}, {hi})")));
    }
    make(lo).validate().map_err(|e| relabel(e, "lo"))?;
    make(hi).validate().map_err(|e| relabel(e, "hi"))?;
    let mid = 0.5 * (lo + hi);
    let mut values: Vec<(f64, f64)> = Vec::with_capacity(budget);
    for x in [lo, mid, hi] {
        values.push((x, ev.mean(&make(x))?));
    }
    let mut heap = BinaryHeap::new();
    let push = |heap: &mut BinaryHeap<Pending>, a: (f64, f64), b: (f64, f64)| {
        if a.1 != b.1 && b.0 - a.0 >= 2.0 * REFINE_MIN_WIDTH {
            heap.push(Pending { width: b.0 - a.0, lo: a.0, hi: b.0 });
        }
    };
    push(&mut heap, values[0], values[1]);
    push(&mut heap, values[1], values[2]);
    let lookup = |vals: &[(f64, f64)], x: f64| vals.iter().find(|v| v.0 == x).map(|v| v.1);
    while values.len() < budget {
        let Some(p) = heap.pop() else { break };
        let m = 0.5 * (p.lo + p.hi);
        if m <= p.lo || m >= p.hi {
            continue;
        }
        let vm = ev.mean(&make(m))?;
        let (vl, vh) = (
            lookup(&values, p.lo).expect("interval ends were sampled"),
            lookup(&values, p.hi).expect("interval ends were sampled"),
        );
        values.push((m, vm));
        push(&mut heap, (p.lo, vl), (m, vm));
        push(&mut heap, (m, vm), (p.hi, vh));
    }
    let evaluations = values.len();
    values.sort_by(|a, b| a.0.total_cmp(&b.0));
    let sense = ev.task().sense();
    let mut best = values[0];
    for &v in &values[1..] {
        // strict improvement only, so ties keep the smaller x
        if sense.better(v.1, best.1) {
            best = v;
        }
    }
    let mut plateaus = Vec::new();
    let mut start = 0;
    for i in 1..=values.len() {
        if i == values.len() || values[i].1 != values[start].1 {
            if i - start >= 2 {
                plateaus.push(Plateau {
                    lo: values[start].0,
                    hi: values[i - 1].0,
                    value: values[start].1,
                    samples: i - start,
                });
            }
            start = i;
        }
    }
    Ok(RefineResult {
        samples: values,
        best_x: best.0,
        best_value: best.1,
        evaluations,
        plateaus,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub n: usize,
    pub sup_gap: f64,
    pub theory_gap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub task: Task,
    pub fresh: usize,
    pub grid_size: usize,
    pub pdim_bound: Option<f64>,
    pub rows: Vec<ConvergenceRow>,
}

/// `sup_grid |train mean - fresh mean|` for each training size.
///
/// Training sets for different `N` are independent draws; the fresh set is
/// shared. A training size equal to the fresh size reuses the fresh set.
pub fn convergence_report(
    generator: &GeneratorSpec,
    config: &TuneConfig,
    n_list: &[usize],
    fresh_m: usize,
    grid: &[ParamPoint],
    seed: u64,
) -> Result<ConvergenceReport> {
    if n_list.is_empty() || n_list.windows(2).any(|w| w[0] >= w[1]) || n_list[0] == 0 {
        return Err(Error::invalid("N_list", "must be nonempty, positive and strictly increasing"));
    }
    if fresh_m == 0 {
        return Err(Error::invalid("fresh_M", "must be at least 1"));
    }
    if grid.is_empty() {
        return Err(Error::invalid("grid", "must not be empty"));
    }
    let fresh = generator.sample(derive_seed(seed, 0), fresh_m)?;
    let fresh_means = means(&fresh, config, grid)?;
    let (l, shape) = batch_shape(&fresh, config.task)?;
    let _ = l;
    let pdim = shape.and_then(|s| {
        let u = (config.task == Task::Ssl).then_some(s.unlabeled);
        task_pdim(config.task, s.n, s.l, u).ok()
    });
    let h = match config.task.sense() {
        Sense::Maximize => 1.0,
        Sense::Minimize => fresh_means.iter().cloned().fold(0.0, f64::max).max(1.0),
    };
    let mut rows = Vec::new();
    for (j, &n) in n_list.iter().enumerate() {
        let train_means = if n == fresh_m {
            fresh_means.clone()
        } else {
            let train = generator.sample(derive_seed(seed, 1 + j as u64), n)?;
            means(&train, config, grid)?
        };
        let sup_gap = train_means
            .iter()
            .zip(&fresh_means)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let theory_gap = pdim.map(|p| generalization_gap(p, h, n as u64, config.delta)).transpose()?;
        rows.push(ConvergenceRow { n, sup_gap, theory_gap });
    }
    Ok(ConvergenceReport {
        task: config.task,
        fresh: fresh_m,
        grid_size: grid.len(),
        pdim_bound: pdim,
        rows,
    })
}

fn means(instances: &[Instance], config: &TuneConfig, grid: &[ParamPoint]) -> Result<Vec<f64>> {
    let ev = Evaluator::new(instances, config)?;
    Ok(ev.table(grid)?.into_iter().map(|r| r.mean).collect())
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::instances::{gen_clustering, ClusteringGenerator, ClusteringInstance, DistanceMatrix};
    use crate::linkage::Partition;

    fn clustering(seed: u64, n: usize, l: usize, gen: ClusteringGenerator) -> Instance {
        Instance::Clustering(gen_clustering(seed, n, l, 2, 1.0, gen).unwrap())
    }

    /// M1 utility is 1 for `α < 1` and 1/2 for `α > 1`.
    pub(crate) fn unit_step_instance() -> Instance {
        let rows = vec![
            vec![0.0, 0.5, 1.0, 2.0],
            vec![0.5, 0.0, 4.0, 3.0],
            vec![1.0, 4.0, 0.0, 100.0],
            vec![2.0, 3.0, 100.0, 0.0],
        ];
        let d = DistanceMatrix::from_rows(&rows, 100.0).unwrap();
        let target = Partition::new(vec![vec![0, 1, 2], vec![3]], 4).unwrap();
        Instance::Clustering(ClusteringInstance::new(vec![d], target, 100.0).unwrap())
    }

    #[test]
    fn default_grid_sizes() {
        let s = LogRegSettings::default();
        let g = build_grid(Task::ClusteringM1, &GridSpec::default(), 1, &s).unwrap();
        assert_eq!(g.len(), 102);
        let g = build_grid(Task::ClusteringM2, &GridSpec::default(), 3, &s).unwrap();
        assert_eq!(g.len(), 102 * 66);
        let g = build_grid(Task::Logreg, &GridSpec::default(), 5, &s).unwrap();
        assert_eq!(g.len(), 21);
        let g = build_grid(Task::ClusteringM3, &GridSpec::default(), 2, &s).unwrap();
        assert_eq!(g.len(), 25);
    }

    #[test]
    fn grid_rejects_alpha_in_exclusion_zone() {
        let spec = GridSpec {
            alpha: Some(Axis { lo: 1e-9, hi: 1.0, points: 3, log: true }),
            ..GridSpec::default()
        };
        match build_grid(Task::ClusteringM1, &spec, 1, &LogRegSettings::default()) {
            Err(Error::InvalidInput { field, .. }) => assert_eq!(field, "grid.alpha"),
            other => panic!("expected invalid alpha, got {other:?}"),
        }
    }

    #[test]
    fn grid_rejects_lambda_outside_range() {
        let spec = GridSpec {
            lambda: Some(Axis { lo: 0.05, hi: 1.0, points: 3, log: false }),
            ..GridSpec::default()
        };
        assert!(build_grid(Task::Logreg, &spec, 5, &LogRegSettings::default()).is_err());
    }

    #[test]
    fn single_point_grid() {
        let insts = vec![clustering(1, 6, 1, ClusteringGenerator::UniformSmooth)];
        let p = ParamPoint::LinkageScalar { alpha: 2.0, beta: Simplex::uniform(1) };
        let mut cfg = TuneConfig::new(Task::ClusteringM1);
        cfg.grid.points = Some(vec![p.clone()]);
        let r = erm_tune(&insts, &cfg).unwrap();
        assert_eq!(r.best_param, p);
        let Instance::Clustering(c) = &insts[0] else { unreachable!() };
        let u = crate::linkage::clustering_utility(c, &MergeFamily::MinMax { alpha: 2.0 }, &Simplex::uniform(1)).unwrap();
        assert_eq!(r.train_utility, u);
    }

    #[test]
    fn planted_blobs_reach_full_utility() {
        let insts: Vec<Instance> = (0..5).map(|s| clustering(s, 10, 2, ClusteringGenerator::PlantedBlobs)).collect();
        let r = erm_tune(&insts, &TuneConfig::new(Task::ClusteringM2)).unwrap();
        assert_eq!(r.train_utility, 1.0);
        assert!(r.bound_report.is_some());
    }

    #[test]
    fn permutation_invariance() {
        let mut insts: Vec<Instance> = (0..7).map(|s| clustering(s, 6, 1, ClusteringGenerator::UniformSmooth)).collect();
        let cfg = TuneConfig::new(Task::ClusteringM1);
        let a = erm_tune(&insts, &cfg).unwrap();
        insts.reverse();
        let b = erm_tune(&insts, &cfg).unwrap();
        assert_eq!(a.best_param, b.best_param);
        assert_eq!(a.train_utility.to_bits(), b.train_utility.to_bits());
        for (ra, rb) in a.utility_table.iter().zip(&b.utility_table) {
            assert_eq!(ra.mean.to_bits(), rb.mean.to_bits());
        }
    }

    #[test]
    fn ties_go_to_smallest_parameter() {
        let insts = vec![clustering(3, 2, 1, ClusteringGenerator::UniformSmooth)];
        let r = erm_tune(&insts, &TuneConfig::new(Task::ClusteringM1)).unwrap();
        // every exponent recovers a 2-point target
        assert_eq!(r.best_param, ParamPoint::LinkageScalar { alpha: f64::NEG_INFINITY, beta: Simplex::uniform(1) });
    }

    #[test]
    fn heterogeneous_batches_are_rejected() {
        let insts = vec![
            clustering(1, 6, 1, ClusteringGenerator::UniformSmooth),
            clustering(2, 6, 2, ClusteringGenerator::UniformSmooth),
        ];
        assert!(erm_tune(&insts, &TuneConfig::new(Task::ClusteringM1)).is_err());
        let mixed = vec![
            clustering(1, 6, 1, ClusteringGenerator::UniformSmooth),
            Instance::LogReg(crate::instances::gen_logreg(1, 5, 2, 5, 1.0).unwrap()),
        ];
        assert!(erm_tune(&mixed, &TuneConfig::new(Task::ClusteringM1)).is_err());
    }

    #[test]
    fn cache_hits_match_recomputation() {
        let insts: Vec<Instance> = (0..3).map(|s| clustering(s, 6, 2, ClusteringGenerator::UniformSmooth)).collect();
        let ev = Evaluator::new(&insts, &TuneConfig::new(Task::ClusteringM2)).unwrap();
        let p = ParamPoint::LinkageScalar { alpha: 1.5, beta: Simplex::new(vec![0.3, 0.7]).unwrap() };
        let first = ev.row(&p).unwrap();
        let computed = ev.computed();
        let second = ev.row(&p).unwrap();
        assert_eq!(ev.computed(), computed);
        for (i, (a, b)) in first.iter().zip(&second).enumerate() {
            assert_eq!(a.to_bits(), b.to_bits());
            assert_eq!(a.to_bits(), ev.compute(i, &p).unwrap().to_bits());
        }
    }

    #[test]
    fn refine_rejects_small_budget() {
        let insts = vec![unit_step_instance()];
        let ev = Evaluator::new(&insts, &TuneConfig::new(Task::ClusteringM1)).unwrap();
        let make = scalar_param(Task::ClusteringM1, Simplex::uniform(1)).unwrap();
        assert!(refine_1d(&ev, &*make, 0.1, 10.0, 2).is_err());
    }

    #[test]
    fn refine_constant_costs_three() {
        let insts = vec![clustering(0, 2, 1, ClusteringGenerator::UniformSmooth)];
        let ev = Evaluator::new(&insts, &TuneConfig::new(Task::ClusteringM1)).unwrap();
        let make = scalar_param(Task::ClusteringM1, Simplex::uniform(1)).unwrap();
        let r = refine_1d(&ev, &*make, 0.1, 10.0, 50).unwrap();
        assert_eq!(r.evaluations, 3);
        assert_eq!(r.plateaus.len(), 1);
    }

    #[test]
    fn refine_localizes_unit_step() {
        let insts = vec![unit_step_instance()];
        let ev = Evaluator::new(&insts, &TuneConfig::new(Task::ClusteringM1)).unwrap();
        let make = scalar_param(Task::ClusteringM1, Simplex::uniform(1)).unwrap();
        let r = refine_1d(&ev, &*make, 0.1, 10.0, 30).unwrap();
        assert!(r.evaluations <= 30);
        let s = &r.samples;
        let k = s.windows(2).position(|w| w[0].1 != w[1].1).unwrap();
        assert_eq!(s[k].1, 1.0);
        assert_eq!(s[k + 1].1, 0.5);
        assert!(s[k].0 < 1.0 && s[k + 1].0 > 1.0);
        assert!(s[k + 1].0 - s[k].0 < 1e-3);
        assert_eq!(r.best_value, 1.0);
        for p in &r.plateaus {
            assert!(p.samples >= 2);
        }
    }

    #[test]
    fn refine_best_dominates_samples() {
        let insts: Vec<Instance> = (0..4).map(|s| clustering(s, 6, 1, ClusteringGenerator::UniformSmooth)).collect();
        let ev = Evaluator::new(&insts, &TuneConfig::new(Task::ClusteringM1)).unwrap();
        let make = scalar_param(Task::ClusteringM1, Simplex::uniform(1)).unwrap();
        let r = refine_1d(&ev, &*make, 0.5, 4.0, 40).unwrap();
        assert!(r.samples.iter().all(|s| s.1 <= r.best_value));
    }

    #[test]
    fn exact_mode_matches_dense_scan() {
        let insts: Vec<Instance> = (0..3).map(|s| clustering(s, 5, 1, ClusteringGenerator::UniformSmooth)).collect();
        let mut cfg = TuneConfig::new(Task::ClusteringM1);
        cfg.search = SearchMode::ExactM1 { lo: 0.5, hi: 4.0 };
        let exact = erm_tune(&insts, &cfg).unwrap();
        let mut dense = TuneConfig::new(Task::ClusteringM1);
        dense.grid.points = Some(
            linspace(0.5, 4.0, 400)
                .into_iter()
                .map(|alpha| ParamPoint::LinkageScalar { alpha, beta: Simplex::uniform(1) })
                .collect(),
        );
        let scan = erm_tune(&insts, &dense).unwrap();
        assert!(exact.train_utility >= scan.train_utility);
        assert_eq!(exact.mode, "exact-m1");
    }

    #[test]
    fn exact_mode_guards_size() {
        let insts = vec![clustering(0, 13, 1, ClusteringGenerator::UniformSmooth)];
        assert!(exact_m1_candidates(&insts, 0.5, 4.0).is_err());
    }

    #[test]
    fn logreg_minimizes_loss() {
        let insts: Vec<Instance> = (0..3)
            .map(|s| Instance::LogReg(crate::instances::gen_logreg(s, 30, 3, 30, 1.0).unwrap()))
            .collect();
        let r = erm_tune(&insts, &TuneConfig::new(Task::Logreg)).unwrap();
        assert_eq!(r.sense, Sense::Minimize);
        assert!(r.utility_table.iter().all(|row| row.mean >= r.train_utility));
        assert!(r.bound_report.is_none());
    }

    #[test]
    fn ssl_utility_is_one_minus_loss() {
        let insts: Vec<Instance> = (0..2)
            .map(|s| Instance::Ssl(crate::instances::gen_ssl(s, 4, 8, 1, 1.0).unwrap()))
            .collect();
        let mut cfg = TuneConfig::new(Task::Ssl);
        cfg.grid.sigma = Some(Axis { lo: 0.1, hi: 1.0, points: 4, log: true });
        let r = erm_tune(&insts, &cfg).unwrap();
        assert!((0.0..=1.0).contains(&r.train_utility));
        let ParamPoint::Ssl { sigma, beta } = &r.best_param else { panic!() };
        let Instance::Ssl(s0) = &insts[0] else { unreachable!() };
        assert_eq!(r.utility_table.iter().find(|row| row.param == r.best_param).unwrap().per_instance[0],
            1.0 - ssl_loss(s0, *sigma, beta).unwrap());
    }

    #[test]
    fn convergence_gap_zero_on_fresh_set() {
        let gen = GeneratorSpec::Clustering { n: 5, l: 1, k: 2, r: 1.0, generator: ClusteringGenerator::UniformSmooth };
        let cfg = TuneConfig::new(Task::ClusteringM1);
        let grid = build_grid(Task::ClusteringM1, &GridSpec::default(), 1, &cfg.logreg).unwrap();
        let rep = convergence_report(&gen, &cfg, &[5, 20], 20, &grid, 3).unwrap();
        assert_eq!(rep.rows[1].sup_gap, 0.0);
        assert!(rep.rows[0].sup_gap > 0.0);
        assert!(rep.rows[0].theory_gap.unwrap() > rep.rows[0].sup_gap);
        assert!(convergence_report(&gen, &cfg, &[20, 5], 20, &grid, 3).is_err());
    }

    #[test]
    fn config_round_trip_and_unknown_fields() {
        let cfg = TuneConfig::new(Task::ClusteringM3);
        let text = serde_json::to_string(&cfg).unwrap();
        assert!(text.contains("clustering-M3"));
        let back: TuneConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, cfg);
        assert!(serde_json::from_str::<TuneConfig>(r#"{"task":"ssl","bogus":1}"#).is_err());
        let minimal: TuneConfig = serde_json::from_str(r#"{"task":"logreg"}"#).unwrap();
        assert_eq!(minimal.logreg, LogRegSettings::default());
    }
}
