//! Regularized logistic regression: exact solvers, approximate
//! regularization paths and the validation-loss surrogates built on them.
//!
//! The ℓ2 objective is `l(β) + λ‖β‖²`, the ℓ1 objective `l(β) + λ‖β‖₁`, with
//! `l` the mean logistic loss. Paths run from `λ_min` to `λ_max` on knots
//! `λ_t = λ_min + tε`; each piece is affine in `λ`.

use log::{debug, warn};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instances::LogRegInstance;
use crate::numerics::{sigmoid, softplus};

pub const MAX_ITERATIONS: usize = 10_000;
/// Gradient ∞-norm target of the ℓ2 solver.
pub const L2_TOL: f64 = 1e-10;
/// Subgradient-residual target of the ℓ1 solver.
pub const L1_TOL: f64 = 1e-8;
/// Default threshold below which path coordinates are dropped from the active set.
pub const DEFAULT_DELTA_DROP: f64 = 1e-6;
/// Ridge added to a singular Hessian.
pub const HESSIAN_RIDGE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Penalty {
    L1,
    L2,
}

impl Penalty {
    pub fn label(self) -> &'static str {
        match self {
            Penalty::L1 => "l1",
            Penalty::L2 => "l2",
        }
    }
}

fn margins(beta: &DVector<f64>, x: &DMatrix<f64>, y: &[f64]) -> DVector<f64> {
    let xb = x * beta;
    DVector::from_fn(y.len(), |i, _| y[i] * xb[i])
}

/// Mean of `log(1 + exp(-y_i x_iᵀβ))`.
pub fn logistic_loss(beta: &DVector<f64>, x: &DMatrix<f64>, y: &[f64]) -> f64 {
    let m = margins(beta, x, y);
    m.iter().map(|&v| softplus(-v)).sum::<f64>() / y.len() as f64
}

pub fn logistic_grad(beta: &DVector<f64>, x: &DMatrix<f64>, y: &[f64]) -> DVector<f64> {
    let m = margins(beta, x, y);
    let r = DVector::from_fn(y.len(), |i, _| -y[i] * sigmoid(-m[i]));
    x.tr_mul(&r) / y.len() as f64
}

pub fn logistic_hessian(beta: &DVector<f64>, x: &DMatrix<f64>, y: &[f64]) -> DMatrix<f64> {
    let m = margins(beta, x, y);
    let mut xw = x.clone();
    for i in 0..y.len() {
        let s = sigmoid(m[i]);
        let w = s * (1.0 - s);
        xw.row_mut(i).scale_mut(w);
    }
    x.tr_mul(&xw) / y.len() as f64
}

/// `H⁻¹ rhs` for each column of `rhs`; falls back to `H + ridge·I` when `H` is singular.
fn spd_solve(h: &DMatrix<f64>, rhs: &DMatrix<f64>) -> DMatrix<f64> {
    if let Some(c) = h.clone().cholesky() {
        return c.solve(rhs);
    }
    warn!("singular Hessian of size {}; adding {HESSIAN_RIDGE:e} ridge", h.nrows());
    let mut damped = h.clone();
    for i in 0..h.nrows() {
        damped[(i, i)] += HESSIAN_RIDGE;
    }
    match damped.clone().cholesky() {
        Some(c) => c.solve(rhs),
        None => damped.lu().solve(rhs).unwrap_or_else(|| DMatrix::zeros(rhs.nrows(), rhs.ncols())),
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid("lambda", format!("must be positive, got {lambda}")))
    }
}

fn check_shapes(x: &DMatrix<f64>, y: &[f64]) -> Result<()> {
    if x.nrows() != y.len() || y.is_empty() {
        return Err(Error::invalid("X/y", "row count of X must equal len(y) and be at least 1"));
    }
    Ok(())
}

/// Regularized minimizer from the zero vector.
pub fn solve_rlr(x: &DMatrix<f64>, y: &[f64], lambda: f64, penalty: Penalty) -> Result<DVector<f64>> {
    solve_rlr_from(x, y, lambda, penalty, DVector::zeros(x.ncols()))
}

pub fn solve_rlr_from(
    x: &DMatrix<f64>,
    y: &[f64],
    lambda: f64,
    penalty: Penalty,
    init: DVector<f64>,
) -> Result<DVector<f64>> {
    check_lambda(lambda)?;
    check_shapes(x, y)?;
    if init.len() != x.ncols() {
        return Err(Error::invalid("init", "length differs from column count of X"));
    }
    match penalty {
        Penalty::L2 => solve_l2(x, y, lambda, init),
        Penalty::L1 => solve_l1(x, y, lambda, init),
    }
}

fn solve_l2(x: &DMatrix<f64>, y: &[f64], lambda: f64, mut beta: DVector<f64>) -> Result<DVector<f64>> {
    let p = x.ncols();
    let objective = |b: &DVector<f64>| logistic_loss(b, x, y) + lambda * b.norm_squared();
    let mut f = objective(&beta);
    let mut residual = f64::INFINITY;
    for _ in 0..MAX_ITERATIONS {
        let g = logistic_grad(&beta, x, y) + &beta * (2.0 * lambda);
        residual = g.amax();
        if residual <= L2_TOL {
            return Ok(beta);
        }
        let mut h = logistic_hessian(&beta, x, y);
        for i in 0..p {
            h[(i, i)] += 2.0 * lambda;
        }
        let d = -spd_solve(&h, &DMatrix::from_column_slice(p, 1, g.as_slice())).column(0).into_owned();
        let slope = g.dot(&d);
        let mut t = 1.0;
        loop {
            let cand = &beta + &d * t;
            let fc = objective(&cand);
            // slack absorbs rounding once decreases reach machine precision
            if fc <= f + 1e-4 * t * slope + 4.0 * f64::EPSILON * f.abs() || t < 1e-12 {
                beta = cand;
                f = fc;
                break;
            }
            t *= 0.5;
        }
    }
    Err(Error::Convergence { iterations: MAX_ITERATIONS, residual })
}

fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

/// Distance of `0` from the ℓ1 subdifferential at `beta`.
pub fn l1_residual(beta: &DVector<f64>, grad: &DVector<f64>, lambda: f64) -> f64 {
    beta.iter()
        .zip(grad.iter())
        .map(|(&b, &g)| {
            if b != 0.0 {
                (g + lambda * b.signum()).abs()
            } else {
                (g.abs() - lambda).max(0.0)
            }
        })
        .fold(0.0, f64::max)
}

/// Newton iterations on the support of `beta` with its signs held fixed.
fn polish_l1(x: &DMatrix<f64>, y: &[f64], lambda: f64, beta: &DVector<f64>) -> Option<DVector<f64>> {
    let support: Vec<usize> = (0..beta.len()).filter(|&j| beta[j] != 0.0).collect();
    if support.is_empty() {
        return None;
    }
    let signs: Vec<f64> = support.iter().map(|&j| beta[j].signum()).collect();
    let mut b = beta.clone();
    for _ in 0..50 {
        let g = logistic_grad(&b, x, y);
        let h = logistic_hessian(&b, x, y);
        let k = support.len();
        let hs = DMatrix::from_fn(k, k, |r, c| h[(support[r], support[c])]);
        let gs = DMatrix::from_fn(k, 1, |r, _| g[support[r]] + lambda * signs[r]);
        if gs.amax() <= 1e-13 {
            break;
        }
        let step = spd_solve(&hs, &gs);
        for (r, &j) in support.iter().enumerate() {
            b[j] -= step[(r, 0)];
        }
    }
    let consistent = support.iter().zip(&signs).all(|(&j, &s)| b[j] * s > 0.0);
    consistent.then_some(b)
}

fn solve_l1(x: &DMatrix<f64>, y: &[f64], lambda: f64, mut beta: DVector<f64>) -> Result<DVector<f64>> {
    let mut step: f64 = 1.0;
    let mut residual = f64::INFINITY;
    for it in 0..MAX_ITERATIONS {
        let g = logistic_grad(&beta, x, y);
        residual = l1_residual(&beta, &g, lambda);
        if residual <= L1_TOL {
            return Ok(beta);
        }
        if it % 25 == 24 {
            if let Some(b) = polish_l1(x, y, lambda, &beta) {
                let r = l1_residual(&b, &logistic_grad(&b, x, y), lambda);
                if r <= L1_TOL {
                    return Ok(b);
                }
            }
        }
        let l0 = logistic_loss(&beta, x, y);
        step = (step * 2.0).min(1e6);
        loop {
            let cand = DVector::from_fn(beta.len(), |j, _| soft_threshold(beta[j] - step * g[j], step * lambda));
            let diff = &cand - &beta;
            let bound = l0 + g.dot(&diff) + diff.norm_squared() / (2.0 * step);
            if logistic_loss(&cand, x, y) <= bound + 4.0 * f64::EPSILON * l0.abs() || step < 1e-14 {
                beta = cand;
                break;
            }
            step *= 0.5;
        }
    }
    Err(Error::Convergence { iterations: MAX_ITERATIONS, residual })
}

/// One affine piece `β(λ) = aλ + b` on `(lambda_lo, lambda_hi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSegment {
    pub lambda_lo: f64,
    pub lambda_hi: f64,
    pub a: DVector<f64>,
    pub b: DVector<f64>,
    /// Coordinates allowed to be nonzero (ℓ1); every coordinate for ℓ2.
    pub active_set: Vec<usize>,
}

impl PathSegment {
    pub fn eval(&self, lambda: f64) -> DVector<f64> {
        &self.a * lambda + &self.b
    }
}

/// Piecewise-affine approximate regularization path.
#[derive(Debug, Clone, PartialEq)]
pub struct RegPath {
    pub segments: Vec<PathSegment>,
    pub eps: f64,
    pub penalty: Penalty,
    pub lambda_min: f64,
    pub lambda_max: f64,
    /// Exact solution at `lambda_min`.
    pub beta0: DVector<f64>,
}

impl RegPath {
    /// Path model at `lambda`; `lambda_min` returns `beta0` exactly.
    pub fn eval(&self, lambda: f64) -> Result<DVector<f64>> {
        if !(lambda >= self.lambda_min && lambda <= self.lambda_max) {
            return Err(Error::invalid(
                "lambda",
                format!("{lambda} outside path domain [{}, {}]", self.lambda_min, self.lambda_max),
            ));
        }
        if lambda == self.lambda_min {
            return Ok(self.beta0.clone());
        }
        let i = self.segments.partition_point(|s| s.lambda_hi < lambda);
        let seg = &self.segments[i.min(self.segments.len() - 1)];
        Ok(seg.eval(lambda))
    }
}

/// Where path pieces are recorded relative to the Newton targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KnotAnchoring {
    /// Pieces cover `[λ_min + tε, λ_min + (t+1)ε]`, the λ each step targets.
    #[default]
    Exact,
    /// Fault injection: the step targets `λ_min + (t+1)ε` but the piece is
    /// recorded on `[λ_min + 2tε, λ_min + 2(t+1)ε]`.
    Doubled,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathOptions {
    pub delta_drop: f64,
    pub anchoring: KnotAnchoring,
}

impl Default for PathOptions {
    fn default() -> Self {
        PathOptions {
            delta_drop: DEFAULT_DELTA_DROP,
            anchoring: KnotAnchoring::Exact,
        }
    }
}

pub fn approx_path(
    instance: &LogRegInstance,
    eps: f64,
    lambda_min: f64,
    lambda_max: f64,
    penalty: Penalty,
    delta_drop: f64,
) -> Result<RegPath> {
    approx_path_with(
        instance,
        eps,
        lambda_min,
        lambda_max,
        penalty,
        PathOptions { delta_drop, ..PathOptions::default() },
    )
}

pub fn approx_path_with(
    instance: &LogRegInstance,
    eps: f64,
    lambda_min: f64,
    lambda_max: f64,
    penalty: Penalty,
    opts: PathOptions,
) -> Result<RegPath> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::invalid("eps", format!("must be positive, got {eps}")));
    }
    check_lambda(lambda_min)?;
    if !(lambda_max > lambda_min && lambda_max.is_finite()) {
        return Err(Error::invalid("lambda_max", "must exceed lambda_min"));
    }
    if !(opts.delta_drop >= 0.0) {
        return Err(Error::invalid("delta_drop", "must be nonnegative"));
    }
    instance.validate()?;
    let (x, y) = (&instance.x, instance.y.as_slice());
    let beta0 = solve_rlr(x, y, lambda_min, penalty)?;
    let mut segments = match penalty {
        Penalty::L2 => l2_segments(x, y, &beta0, eps, lambda_min, lambda_max),
        Penalty::L1 => l1_segments(x, y, &beta0, eps, lambda_min, lambda_max, opts.delta_drop),
    };
    if opts.anchoring == KnotAnchoring::Doubled {
        let mut kept = Vec::new();
        for s in segments.drain(..) {
            let lo = lambda_min + 2.0 * (s.lambda_lo - lambda_min);
            if lo >= lambda_max {
                break;
            }
            let hi = (lambda_min + 2.0 * (s.lambda_hi - lambda_min)).min(lambda_max);
            kept.push(PathSegment { lambda_lo: lo, lambda_hi: hi, ..s });
        }
        if let Some(last) = kept.last_mut() {
            last.lambda_hi = lambda_max;
        }
        segments = kept;
    }
    Ok(RegPath {
        segments,
        eps,
        penalty,
        lambda_min,
        lambda_max,
        beta0,
    })
}

/// Knot sequence `λ_min + tε`, with the last knot clamped to `λ_max`.
pub fn knots(eps: f64, lambda_min: f64, lambda_max: f64) -> Vec<f64> {
    let mut out = vec![lambda_min];
    let mut t = 1u64;
    loop {
        let k = lambda_min + t as f64 * eps;
        if k >= lambda_max - 1e-12 * eps {
            out.push(lambda_max);
            return out;
        }
        out.push(k);
        t += 1;
    }
}

fn l2_segments(
    x: &DMatrix<f64>,
    y: &[f64],
    beta0: &DVector<f64>,
    eps: f64,
    lambda_min: f64,
    lambda_max: f64,
) -> Vec<PathSegment> {
    let p = beta0.len();
    let ks = knots(eps, lambda_min, lambda_max);
    let mut beta = beta0.clone();
    let mut out = Vec::with_capacity(ks.len() - 1);
    for w in ks.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let mut h = logistic_hessian(&beta, x, y);
        for i in 0..p {
            h[(i, i)] += 2.0 * hi;
        }
        let g = logistic_grad(&beta, x, y);
        let mut rhs = DMatrix::zeros(p, 2);
        rhs.set_column(0, &beta);
        rhs.set_column(1, &g);
        let sol = spd_solve(&h, &rhs);
        let a = sol.column(0) * -2.0;
        let b = &beta - sol.column(1);
        let seg = PathSegment {
            lambda_lo: lo,
            lambda_hi: hi,
            a,
            b,
            active_set: (0..p).collect(),
        };
        beta = seg.eval(hi);
        out.push(seg);
    }
    out
}

/// Newton step on `active` with signs `signs`, affine in the target λ.
fn l1_affine(
    x: &DMatrix<f64>,
    y: &[f64],
    beta: &DVector<f64>,
    active: &[usize],
    signs: &[f64],
) -> (DVector<f64>, DVector<f64>) {
    let p = beta.len();
    let mut a = DVector::zeros(p);
    let mut b = DVector::zeros(p);
    if active.is_empty() {
        return (a, b);
    }
    let g = logistic_grad(beta, x, y);
    let h = logistic_hessian(beta, x, y);
    let k = active.len();
    let hs = DMatrix::from_fn(k, k, |r, c| h[(active[r], active[c])]);
    let rhs = DMatrix::from_fn(k, 2, |r, c| if c == 0 { signs[active[r]] } else { g[active[r]] });
    let sol = spd_solve(&hs, &rhs);
    for (r, &j) in active.iter().enumerate() {
        a[j] = -sol[(r, 0)];
        b[j] = beta[j] - sol[(r, 1)];
    }
    (a, b)
}

/// Smallest λ in `(lo, hi]` where `|∇_j l| - λ` turns positive for an inactive `j`.
fn first_activation(
    x: &DMatrix<f64>,
    y: &[f64],
    a: &DVector<f64>,
    b: &DVector<f64>,
    inactive: &[usize],
    lo: f64,
    hi: f64,
) -> Option<(f64, usize, f64)> {
    const TOL: f64 = 1e-10;
    let excess = |lam: f64| {
        let g = logistic_grad(&(a * lam + b), x, y);
        inactive.iter().map(|&j| (j, g[j].abs() - lam, g[j])).collect::<Vec<_>>()
    };
    let at_hi = excess(hi);
    let mut best: Option<(f64, usize, f64)> = None;
    for &(j, e, g) in &at_hi {
        if e <= TOL {
            continue;
        }
        let (mut l, mut h) = (lo, hi);
        let f = |lam: f64| logistic_grad(&(a * lam + b), x, y)[j].abs() - lam;
        if f(l) > TOL {
            h = l;
        } else {
            while h - l > 1e-13 * hi.max(1.0) {
                let mid = 0.5 * (l + h);
                if f(mid) > TOL {
                    h = mid;
                } else {
                    l = mid;
                }
            }
        }
        if best.is_none_or(|(bl, _, _)| h < bl) {
            best = Some((h, j, g));
        }
    }
    best
}

#[allow(clippy::too_many_arguments)]
fn l1_segments(
    x: &DMatrix<f64>,
    y: &[f64],
    beta0: &DVector<f64>,
    eps: f64,
    lambda_min: f64,
    lambda_max: f64,
    delta_drop: f64,
) -> Vec<PathSegment> {
    const EVENT_GAP: f64 = 1e-12;
    let p = beta0.len();
    let ks = knots(eps, lambda_min, lambda_max);
    let mut beta = beta0.clone();
    let mut signs: Vec<f64> = beta.iter().map(|v| v.signum()).collect();
    let mut active: Vec<usize> = (0..p).filter(|&j| beta[j].abs() >= delta_drop).collect();
    for j in 0..p {
        if !active.contains(&j) {
            beta[j] = 0.0;
        }
    }
    let mut out = Vec::new();
    for w in ks.windows(2) {
        let (mut lam, target) = (w[0], w[1]);
        let mut dropped_here: Vec<usize> = Vec::new();
        // pieces end at knots or at active-set changes inside the interval
        for _ in 0..(4 * p + 8) {
            let (a, b) = l1_affine(x, y, &beta, &active, &signs);
            let mut event: Option<(f64, usize, bool, f64)> = None;
            for &j in &active {
                if a[j] != 0.0 {
                    let z = -b[j] / a[j];
                    if z > lam + EVENT_GAP && z < target && event.is_none_or(|e| z < e.0) {
                        event = Some((z, j, false, 0.0));
                    }
                }
            }
            let inactive: Vec<usize> = (0..p)
                .filter(|j| !active.contains(j) && !dropped_here.contains(j))
                .collect();
            let upper = event.map_or(target, |e| e.0);
            if let Some((la, j, g)) = first_activation(x, y, &a, &b, &inactive, lam, upper) {
                if la < upper || event.is_none() {
                    event = Some((la, j, true, g));
                }
            }
            match event {
                Some((at, j, activate, g)) if at <= lam + EVENT_GAP => {
                    // immediate activation: no piece to record
                    debug_assert!(activate);
                    active.push(j);
                    active.sort_unstable();
                    signs[j] = -g.signum();
                }
                Some((at, j, activate, g)) => {
                    out.push(PathSegment {
                        lambda_lo: lam,
                        lambda_hi: at,
                        a: a.clone(),
                        b: b.clone(),
                        active_set: active.clone(),
                    });
                    beta = &a * at + &b;
                    lam = at;
                    if activate {
                        active.push(j);
                        active.sort_unstable();
                        signs[j] = -g.signum();
                    } else {
                        beta[j] = 0.0;
                        active.retain(|&k| k != j);
                        dropped_here.push(j);
                    }
                    debug!("l1 path: coordinate {j} {} at lambda {at}", if activate { "enters" } else { "leaves" });
                }
                None => {
                    out.push(PathSegment {
                        lambda_lo: lam,
                        lambda_hi: target,
                        a: a.clone(),
                        b: b.clone(),
                        active_set: active.clone(),
                    });
                    beta = &a * target + &b;
                    lam = target;
                    break;
                }
            }
        }
        if lam < target {
            // event budget exhausted: close the interval with the last affine step
            let (a, b) = l1_affine(x, y, &beta, &active, &signs);
            out.push(PathSegment {
                lambda_lo: lam,
                lambda_hi: target,
                a: a.clone(),
                b: b.clone(),
                active_set: active.clone(),
            });
            beta = &a * target + &b;
        }
        // drop rule, plus coordinates whose sign flipped
        let before = active.len();
        active.retain(|&j| beta[j].abs() >= delta_drop && beta[j] * signs[j] > 0.0);
        if active.len() != before {
            for j in 0..p {
                if !active.contains(&j) {
                    beta[j] = 0.0;
                }
            }
        }
    }
    out
}

/// Validation loss of the path model at `lambda`.
pub fn surrogate_val_loss(path: &RegPath, lambda: f64, instance: &LogRegInstance) -> Result<f64> {
    let beta = path.eval(lambda)?;
    Ok(logistic_loss(&beta, &instance.x_val, &instance.y_val))
}

/// Validation loss of the exact regularized minimizer.
pub fn true_val_loss(instance: &LogRegInstance, lambda: f64, penalty: Penalty) -> Result<f64> {
    let beta = solve_rlr(&instance.x, &instance.y, lambda, penalty)?;
    Ok(logistic_loss(&beta, &instance.x_val, &instance.y_val))
}

/// Piecewise-linear loss in λ through one random knot per ε-interval.
///
/// The ends are pinned to the path values at `λ_min` and `λ_max`, so every
/// λ in range is interpolated and none is extrapolated.
#[derive(Debug, Clone, PartialEq)]
pub struct OnlineSurrogate {
    /// Random knots, one per ε-interval, increasing.
    pub knots: Vec<f64>,
    pub values: Vec<f64>,
    pub lambda_min: f64,
    pub lambda_max: f64,
    /// Path values at `λ_min` and `λ_max`.
    pub end_values: (f64, f64),
}

impl OnlineSurrogate {
    /// Interpolation nodes: `λ_min`, the random knots, `λ_max`.
    pub fn nodes(&self) -> (Vec<f64>, Vec<f64>) {
        let mut xs = Vec::with_capacity(self.knots.len() + 2);
        let mut vs = Vec::with_capacity(self.knots.len() + 2);
        xs.push(self.lambda_min);
        vs.push(self.end_values.0);
        xs.extend_from_slice(&self.knots);
        vs.extend_from_slice(&self.values);
        xs.push(self.lambda_max);
        vs.push(self.end_values.1);
        (xs, vs)
    }

    /// Values outside `[λ_min, λ_max]` are those of the nearest end.
    pub fn eval(&self, lambda: f64) -> f64 {
        let (k, v) = self.nodes();
        if lambda <= k[0] {
            return v[0];
        }
        if lambda >= k[k.len() - 1] {
            return v[v.len() - 1];
        }
        let i = k.partition_point(|&t| t < lambda);
        let (x0, x1) = (k[i - 1], k[i]);
        if lambda == x1 {
            return v[i];
        }
        let w = (lambda - x0) / (x1 - x0);
        v[i - 1] + w * (v[i] - v[i - 1])
    }
}

/// Builds the loss-interpolation surrogate for one instance.
///
/// Knot `k` is uniform on `[λ_min + kε, λ_min + (k+1)ε] ∩ [λ_min, λ_max]`;
/// its value is the path surrogate at that knot.
pub fn online_surrogate<R: Rng + ?Sized>(
    instance: &LogRegInstance,
    eps: f64,
    lambda_min: f64,
    lambda_max: f64,
    penalty: Penalty,
    rng: &mut R,
) -> Result<OnlineSurrogate> {
    let path = approx_path(instance, eps, lambda_min, lambda_max, penalty, DEFAULT_DELTA_DROP)?;
    let edges = knots(eps, lambda_min, lambda_max);
    let mut ks = Vec::with_capacity(edges.len() - 1);
    let mut values = Vec::with_capacity(edges.len() - 1);
    for w in edges.windows(2) {
        let t = w[0] + rng.random::<f64>() * (w[1] - w[0]);
        ks.push(t);
        values.push(surrogate_val_loss(&path, t, instance)?);
    }
    Ok(OnlineSurrogate {
        knots: ks,
        values,
        lambda_min,
        lambda_max,
        end_values: (
            surrogate_val_loss(&path, lambda_min, instance)?,
            surrogate_val_loss(&path, lambda_max, instance)?,
        ),
    })
}

/// Exact validation losses on `grid`, warm-starting each solve from the previous one.
pub fn true_val_losses(instance: &LogRegInstance, grid: &[f64], penalty: Penalty) -> Result<Vec<f64>> {
    let mut warm = DVector::zeros(instance.p());
    grid.iter()
        .map(|&lam| {
            let beta = solve_rlr_from(&instance.x, &instance.y, lam, penalty, warm.clone())?;
            let v = logistic_loss(&beta, &instance.x_val, &instance.y_val);
            warm = beta;
            Ok(v)
        })
        .collect()
}

/// Factor applied to a calibration maximum before it is used as a bound on
/// unseen instances.
pub const GAP_SAFETY: f64 = 2.0;

/// Largest `|h(λ) - s(λ)| / ε²` over calibration instances, with `s` the online
/// surrogate at `eps` and knots drawn from a stream rooted at `seed`.
pub fn fit_gap_constant(
    instances: &[LogRegInstance],
    eps: f64,
    lambda_min: f64,
    lambda_max: f64,
    penalty: Penalty,
    grid: &[f64],
    seed: u64,
) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for (i, inst) in instances.iter().enumerate() {
        let mut rng = crate::instances::rng_from_seed(crate::instances::derive_seed(seed, i as u64));
        let s = online_surrogate(inst, eps, lambda_min, lambda_max, penalty, &mut rng)?;
        let exact = true_val_losses(inst, grid, penalty)?;
        for (&lam, &h) in grid.iter().zip(&exact) {
            worst = worst.max((h - s.eval(lam)).abs() / (eps * eps));
        }
    }
    Ok(worst)
}

/// Largest coefficient error of `path` against the exact solver on `grid`.
pub fn max_path_error(path: &RegPath, instance: &LogRegInstance, grid: &[f64]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    let mut warm = DVector::zeros(instance.p());
    for &lam in grid {
        let exact = solve_rlr_from(&instance.x, &instance.y, lam, path.penalty, warm.clone())?;
        worst = worst.max((path.eval(lam)? - &exact).norm());
        warm = exact;
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{gen_logreg, rng_from_seed};
    use crate::numerics::linspace;

    #[test]
    fn zero_weights_give_log_two() {
        let inst = gen_logreg(1, 7, 3, 2, 1.0).unwrap();
        let l = logistic_loss(&DVector::zeros(3), &inst.x, &inst.y);
        assert!((l - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn large_margin_does_not_overflow() {
        let x = DMatrix::from_element(1, 1, 50.0);
        let l = logistic_loss(&DVector::from_element(1, 1.0), &x, &[1.0]);
        // log1p(exp(-50)), evaluated in extended precision
        assert!((l - 1.928749847963918e-22).abs() < 1e-34);
        let l = logistic_loss(&DVector::from_element(1, -1.0), &x, &[1.0]);
        assert!((l - 50.0).abs() < 1e-12);
    }

    #[test]
    fn loss_matches_scalar_sum() {
        let inst = gen_logreg(4, 3, 2, 1, 1.0).unwrap();
        let beta = DVector::from_vec(vec![0.3, -1.2]);
        let mut s = 0.0;
        for i in 0..3 {
            let z = inst.y[i] * (inst.x[(i, 0)] * 0.3 - inst.x[(i, 1)] * 1.2);
            s += (1.0 + (-z).exp()).ln();
        }
        assert!((logistic_loss(&beta, &inst.x, &inst.y) - s / 3.0).abs() < 1e-14);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let inst = gen_logreg(2, 20, 3, 1, 2.0).unwrap();
        let beta = DVector::from_vec(vec![0.2, -0.4, 0.9]);
        let g = logistic_grad(&beta, &inst.x, &inst.y);
        let h = logistic_hessian(&beta, &inst.x, &inst.y);
        for j in 0..3 {
            let mut e = DVector::zeros(3);
            e[j] = 1e-6;
            let fd = (logistic_loss(&(&beta + &e), &inst.x, &inst.y) - logistic_loss(&(&beta - &e), &inst.x, &inst.y)) / 2e-6;
            assert!((fd - g[j]).abs() < 1e-8);
            let gd = (logistic_grad(&(&beta + &e), &inst.x, &inst.y) - logistic_grad(&(&beta - &e), &inst.x, &inst.y)) / 2e-6;
            for i in 0..3 {
                assert!((gd[i] - h[(i, j)]).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn l2_first_order_condition() {
        let inst = gen_logreg(3, 50, 5, 10, 2.0).unwrap();
        let b = solve_rlr(&inst.x, &inst.y, 0.3, Penalty::L2).unwrap();
        let g = logistic_grad(&b, &inst.x, &inst.y) + &b * 0.6;
        assert!(g.amax() <= 1e-9);
    }

    #[test]
    fn l2_huge_lambda_shrinks_to_zero() {
        let inst = gen_logreg(3, 50, 5, 10, 2.0).unwrap();
        let b = solve_rlr(&inst.x, &inst.y, 1e6, Penalty::L2).unwrap();
        assert!(b.norm() <= 1e-4);
    }

    #[test]
    fn l1_above_critical_lambda_is_exactly_zero() {
        let inst = gen_logreg(8, 50, 5, 10, 2.0).unwrap();
        let crit = logistic_grad(&DVector::zeros(5), &inst.x, &inst.y).amax();
        let b = solve_rlr(&inst.x, &inst.y, crit * 1.01, Penalty::L1).unwrap();
        assert!(b.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn l1_solution_is_optimal() {
        let inst = gen_logreg(9, 50, 5, 10, 2.0).unwrap();
        for lam in [0.01, 0.05, 0.1] {
            let b = solve_rlr(&inst.x, &inst.y, lam, Penalty::L1).unwrap();
            assert!(l1_residual(&b, &logistic_grad(&b, &inst.x, &inst.y), lam) <= 1e-8);
        }
    }

    #[test]
    fn rejects_nonpositive_lambda() {
        let inst = gen_logreg(9, 5, 2, 1, 1.0).unwrap();
        assert!(solve_rlr(&inst.x, &inst.y, 0.0, Penalty::L2).is_err());
    }

    #[test]
    fn l2_fixed_point_is_kept() {
        let inst = gen_logreg(12, 40, 3, 10, 1.0).unwrap();
        let lam = 0.35;
        let beta = solve_rlr(&inst.x, &inst.y, lam, Penalty::L2).unwrap();
        // a path seeded at the optimum of lam - eps steps to lam; compare with the update at a fixed point
        let segs = l2_segments(&inst.x, &inst.y, &beta, 0.1, lam, lam + 0.1);
        let moved = segs[0].eval(lam + 0.1);
        let exact_next = solve_rlr(&inst.x, &inst.y, lam + 0.1, Penalty::L2).unwrap();
        assert!((moved - exact_next).norm() < 1e-2);
        // at its own λ the update returns the input
        let mut h = logistic_hessian(&beta, &inst.x, &inst.y);
        for i in 0..3 {
            h[(i, i)] += 2.0 * lam;
        }
        let g = logistic_grad(&beta, &inst.x, &inst.y) + &beta * (2.0 * lam);
        let step = spd_solve(&h, &DMatrix::from_column_slice(3, 1, g.as_slice()));
        assert!(step.amax() < 1e-9);
    }

    #[test]
    fn path_is_anchored_and_contiguous() {
        let inst = gen_logreg(5, 50, 5, 50, 2.0).unwrap();
        for pen in [Penalty::L1, Penalty::L2] {
            let path = approx_path(&inst, 0.07, 0.1, 1.1, pen, DEFAULT_DELTA_DROP).unwrap();
            assert_eq!(path.eval(0.1).unwrap(), path.beta0);
            assert_eq!(path.segments[0].lambda_lo, 0.1);
            assert_eq!(path.segments.last().unwrap().lambda_hi, 1.1);
            for w in path.segments.windows(2) {
                assert_eq!(w[0].lambda_hi, w[1].lambda_lo);
                assert!(w[0].lambda_lo < w[0].lambda_hi);
            }
            assert!(path.eval(1.2).is_err());
        }
    }

    #[test]
    fn l1_segments_respect_active_sets() {
        let inst = gen_logreg(6, 50, 5, 50, 2.0).unwrap();
        let path = approx_path(&inst, 0.05, 0.01, 0.5, Penalty::L1, DEFAULT_DELTA_DROP).unwrap();
        for s in &path.segments {
            for j in 0..5 {
                if !s.active_set.contains(&j) {
                    assert_eq!(s.a[j], 0.0);
                    assert_eq!(s.b[j], 0.0);
                }
            }
        }
    }

    #[test]
    fn path_error_shrinks_quadratically() {
        let inst = gen_logreg(21, 50, 5, 50, 2.0).unwrap();
        let grid = linspace(0.1, 1.1, 100);
        for pen in [Penalty::L2, Penalty::L1] {
            let e1 = max_path_error(&approx_path(&inst, 0.1, 0.1, 1.1, pen, DEFAULT_DELTA_DROP).unwrap(), &inst, &grid).unwrap();
            let e2 = max_path_error(&approx_path(&inst, 0.05, 0.1, 1.1, pen, DEFAULT_DELTA_DROP).unwrap(), &inst, &grid).unwrap();
            let ratio = e2 / e1;
            assert!(ratio > 0.15 && ratio < 0.45, "{pen:?}: {e1:e} -> {e2:e}");
        }
    }

    #[test]
    fn surrogate_at_knot_is_direct_loss() {
        let inst = gen_logreg(5, 50, 5, 50, 2.0).unwrap();
        let path = approx_path(&inst, 0.1, 0.1, 1.1, Penalty::L2, DEFAULT_DELTA_DROP).unwrap();
        let seg = &path.segments[3];
        let lam = seg.lambda_hi;
        let direct = logistic_loss(&seg.eval(lam), &inst.x_val, &inst.y_val);
        assert_eq!(surrogate_val_loss(&path, lam, &inst).unwrap(), direct);
        assert!(surrogate_val_loss(&path, 0.05, &inst).is_err());
    }

    #[test]
    fn surrogate_derivative_matches_direction() {
        let inst = gen_logreg(5, 50, 5, 50, 2.0).unwrap();
        let path = approx_path(&inst, 0.1, 0.1, 1.1, Penalty::L2, DEFAULT_DELTA_DROP).unwrap();
        let seg = &path.segments[4];
        let mid = 0.5 * (seg.lambda_lo + seg.lambda_hi);
        let h = 1e-6;
        let fd = (surrogate_val_loss(&path, mid + h, &inst).unwrap() - surrogate_val_loss(&path, mid - h, &inst).unwrap()) / (2.0 * h);
        let analytic = logistic_grad(&seg.eval(mid), &inst.x_val, &inst.y_val).dot(&seg.a);
        assert!((fd - analytic).abs() <= 1e-4 * analytic.abs().max(1e-8));
    }

    #[test]
    fn strong_signal_small_lambda_fits_validation() {
        // labels are the sign of a planted direction on both splits
        let mut inst = gen_logreg(3, 200, 3, 200, 1.0).unwrap();
        let w = DVector::from_vec(vec![1.0, -2.0, 0.5]);
        inst.y = (&inst.x * &w).iter().map(|v| v.signum()).collect();
        inst.y_val = (&inst.x_val * &w).iter().map(|v| v.signum()).collect();
        let path = approx_path(&inst, 0.01, 0.001, 0.05, Penalty::L2, DEFAULT_DELTA_DROP).unwrap();
        assert!(surrogate_val_loss(&path, 0.001, &inst).unwrap() < 0.1);
    }

    #[test]
    fn true_loss_limits() {
        let inst = gen_logreg(3, 50, 5, 50, 2.0).unwrap();
        let big = true_val_loss(&inst, 1e7, Penalty::L2).unwrap();
        assert!((big - std::f64::consts::LN_2).abs() < 1e-5);
        assert_eq!(true_val_loss(&inst, 0.3, Penalty::L1).unwrap(), true_val_loss(&inst, 0.3, Penalty::L1).unwrap());
    }

    #[test]
    fn l2_solution_independent_of_start() {
        let inst = gen_logreg(13, 50, 5, 10, 2.0).unwrap();
        let a = solve_rlr(&inst.x, &inst.y, 0.2, Penalty::L2).unwrap();
        let b = solve_rlr_from(&inst.x, &inst.y, 0.2, Penalty::L2, DVector::from_element(5, 3.0)).unwrap();
        assert!((a - b).amax() < 1e-7);
    }

    #[test]
    fn online_surrogate_interpolates() {
        let inst = gen_logreg(3, 50, 5, 50, 2.0).unwrap();
        let mut rng = rng_from_seed(1);
        let s = online_surrogate(&inst, 0.25, 0.1, 1.1, Penalty::L2, &mut rng).unwrap();
        assert_eq!(s.knots.len(), 4);
        for (k, v) in s.knots.iter().zip(&s.values) {
            assert_eq!(s.eval(*k), *v);
        }
        let mid = 0.5 * (s.knots[1] + s.knots[2]);
        assert!((s.eval(mid) - 0.5 * (s.values[1] + s.values[2])).abs() < 1e-15);
        for (i, k) in s.knots.iter().enumerate() {
            let lo = 0.1 + 0.25 * i as f64;
            assert!(*k >= lo && *k <= lo + 0.25);
        }
    }
}
