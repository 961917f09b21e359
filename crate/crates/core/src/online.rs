//! Full-information exponentially weighted forecaster, regret accounting and
//! empirical dispersion of per-round discontinuities.

use log::{debug, warn};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instances::{derive_seed, rng_from_seed, GeneratorSpec, Instance, Simplex};
use crate::linkage::{clustering_utility_with, enumerate_boundaries_m1, MergeFamily, PruneObjective};
use crate::logreg::{online_surrogate, true_val_losses, Penalty};
use crate::numerics::{linspace, log_sum_exp};
use crate::param::ParamPoint;
use crate::tune::{Evaluator, TuneConfig};

/// Bisection stops once the bracket is this narrow.
pub const JUMP_TOL: f64 = 1e-8;
/// Value changes at most this much above the Lipschitz allowance are not jumps.
pub const JUMP_SLACK: f64 = 1e-9;

/// `sqrt(8 ln N / T)`.
pub fn default_eta(grid_len: usize, t: usize) -> f64 {
    (8.0 * (grid_len as f64).ln() / t as f64).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OnlineRun {
    pub t: usize,
    pub eta: f64,
    /// Range the utilities were clipped to.
    pub h: f64,
    pub choices: Vec<usize>,
    /// Utility of the chosen point in each round.
    pub chosen: Vec<f64>,
    /// Every grid utility in every round, when kept.
    pub utilities: Option<Vec<Vec<f64>>>,
    /// Final cumulative utility of each grid point.
    pub cum_grid: Vec<f64>,
    pub cum_utility: Vec<f64>,
    pub cum_best: Vec<f64>,
    /// `cum_best[t] - cum_utility[t]`; may decrease.
    pub regret: Vec<f64>,
    pub clipped: usize,
}

impl OnlineRun {
    pub fn final_regret(&self) -> f64 {
        self.regret.last().copied().unwrap_or(0.0)
    }

    /// Index of the best grid point in hindsight (smallest index on ties).
    pub fn best_in_hindsight(&self) -> usize {
        let mut best = 0;
        for (i, &v) in self.cum_grid.iter().enumerate() {
            if v > self.cum_grid[best] {
                best = i;
            }
        }
        best
    }
}

/// Sampling distribution of the forecaster from log-weights.
pub fn hedge_probabilities(log_w: &[f64]) -> Vec<f64> {
    let z = log_sum_exp(log_w);
    log_w.iter().map(|&v| (v - z).exp()).collect()
}

fn sample_index<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    // rounding left `acc` just below 1
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(probs.len() - 1)
}

/// Runs the forecaster for `t` rounds. `round(s)` returns the utility of every
/// grid point at round `s`; values outside `[0, h]` are clipped and counted.
pub fn hedge<F>(grid_len: usize, t: usize, eta: Option<f64>, h: f64, seed: u64, keep: bool, mut round: F) -> Result<OnlineRun>
where
    F: FnMut(usize) -> Result<Vec<f64>>,
{
    if grid_len == 0 {
        return Err(Error::invalid("grid", "must not be empty"));
    }
    if t == 0 {
        return Err(Error::invalid("T", "must be at least 1"));
    }
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::invalid("H", format!("must be positive and finite, got {h}")));
    }
    let eta = eta.unwrap_or_else(|| default_eta(grid_len, t));
    if !(eta >= 0.0 && eta.is_finite()) {
        return Err(Error::invalid("eta", format!("must be nonnegative, got {eta}")));
    }
    let mut rng = rng_from_seed(seed);
    let mut log_w = vec![0.0; grid_len];
    let mut cum_grid = vec![0.0; grid_len];
    let mut run = OnlineRun {
        t,
        eta,
        h,
        choices: Vec::with_capacity(t),
        chosen: Vec::with_capacity(t),
        utilities: keep.then(|| Vec::with_capacity(t)),
        cum_grid: Vec::new(),
        cum_utility: Vec::with_capacity(t),
        cum_best: Vec::with_capacity(t),
        regret: Vec::with_capacity(t),
        clipped: 0,
    };
    let mut cum = 0.0;
    for s in 0..t {
        let probs = hedge_probabilities(&log_w);
        let a = sample_index(&probs, &mut rng);
        let mut u = round(s)?;
        if u.len() != grid_len {
            return Err(Error::invalid("round utilities", format!("{} values for {grid_len} grid points", u.len())));
        }
        for v in u.iter_mut() {
            if v.is_nan() {
                return Err(Error::Numerical(format!("NaN utility in round {s}")));
            }
            if *v < 0.0 || *v > h {
                run.clipped += 1;
                *v = v.clamp(0.0, h);
            }
        }
        cum += u[a];
        for i in 0..grid_len {
            cum_grid[i] += u[i];
            log_w[i] += eta * u[i] / h;
        }
        let best = cum_grid.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        run.choices.push(a);
        run.chosen.push(u[a]);
        run.cum_utility.push(cum);
        run.cum_best.push(best);
        run.regret.push(best - cum);
        if let Some(all) = run.utilities.as_mut() {
            all.push(u);
        }
    }
    if run.clipped > 0 {
        warn!("clipped {} utilities to [0, {h}]", run.clipped);
    }
    run.cum_grid = cum_grid;
    Ok(run)
}

/// Hedge over a seeded instance stream; round `s` sees `generator.generate(derive_seed(stream_seed, s))`.
pub fn hedge_run(
    generator: &GeneratorSpec,
    config: &TuneConfig,
    grid: &[ParamPoint],
    t: usize,
    eta: Option<f64>,
    stream_seed: u64,
    seed: u64,
) -> Result<OnlineRun> {
    let h = match config.task.sense() {
        crate::tune::Sense::Maximize => 1.0,
        crate::tune::Sense::Minimize => {
            return Err(Error::invalid("task", "use online_logreg_run for loss-valued tasks"))
        }
    };
    hedge(grid.len(), t, eta, h, seed, false, |s| {
        let inst = [generator.generate(derive_seed(stream_seed, s as u64))?];
        let ev = Evaluator::new(&inst, config)?;
        grid.par_iter().map(|p| ev.value(0, p)).collect()
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OnlineLogRegConfig {
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub t: usize,
    pub penalty: Penalty,
    /// Losses above this are clipped before the forecaster sees them.
    pub h_loss: f64,
    /// Every `audit_stride`-th round also computes exact losses on the whole grid.
    pub audit_stride: usize,
    pub eta: Option<f64>,
}

impl Default for OnlineLogRegConfig {
    fn default() -> Self {
        OnlineLogRegConfig {
            lambda_min: 0.1,
            lambda_max: 1.1,
            t: 500,
            penalty: Penalty::L2,
            h_loss: 2.0,
            audit_stride: 1,
            eta: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OnlineLogRegRun {
    pub run: OnlineRun,
    pub eps: f64,
    pub r: f64,
    pub grid: Vec<f64>,
    /// `Σ s_t(λ_t) - min_λ Σ s_t(λ)` over all rounds, on unclipped surrogate losses.
    pub surrogate_regret: f64,
    pub audit_rounds: Vec<usize>,
    /// Surrogate regret restricted to the audit rounds.
    pub audit_surrogate_regret: f64,
    /// True-loss regret on the audit rounds.
    pub audit_true_regret: f64,
    /// Per audit round, `max_λ |h_t(λ) - s_t(λ)|`.
    pub audit_gaps: Vec<f64>,
}

impl OnlineLogRegRun {
    pub fn max_gap(&self) -> f64 {
        self.audit_gaps.iter().cloned().fold(0.0, f64::max)
    }
}

/// `(ε, r) = (T^{-1/4}, T^{-3/4})`.
pub fn online_resolution(t: usize) -> (f64, f64) {
    let t = t as f64;
    (t.powf(-0.25), t.powf(-0.75))
}

/// `λ_min, λ_min + r, …` up to `λ_max` inclusive.
pub fn lambda_grid(lambda_min: f64, lambda_max: f64, r: f64) -> Vec<f64> {
    let count = ((lambda_max - lambda_min) / r + 1e-9).floor() as usize;
    (0..=count).map(|j| lambda_min + j as f64 * r).collect()
}

fn loss_regret(losses: &[Vec<f64>], choices: &[usize], rounds: &[usize]) -> f64 {
    let n = losses.first().map_or(0, Vec::len);
    let mut cum = vec![0.0; n];
    let mut played = 0.0;
    for &s in rounds {
        played += losses[s][choices[s]];
        for (c, v) in cum.iter_mut().zip(&losses[s]) {
            *c += v;
        }
    }
    played - cum.iter().cloned().fold(f64::INFINITY, f64::min)
}

/// Forecaster over a λ-grid of spacing `r = T^{-3/4}` fed with per-round
/// interpolation surrogates at `ε = T^{-1/4}`.
pub fn online_logreg_run(
    generator: &GeneratorSpec,
    config: &OnlineLogRegConfig,
    stream_seed: u64,
    seed: u64,
) -> Result<OnlineLogRegRun> {
    if !matches!(generator, GeneratorSpec::Logreg { .. }) {
        return Err(Error::invalid("generator.task", "online logreg needs a logreg generator"));
    }
    if config.t < 16 {
        return Err(Error::invalid("T", format!("must be at least 16, got {}", config.t)));
    }
    if config.audit_stride == 0 {
        return Err(Error::invalid("audit_stride", "must be at least 1"));
    }
    let (lmin, lmax) = (config.lambda_min, config.lambda_max);
    if !(lmin > 0.0 && lmin < lmax && lmax.is_finite()) {
        return Err(Error::invalid("lambda_min/lambda_max", format!("need 0 < lo < hi < inf, got ({lmin}, {lmax})")));
    }
    let (eps, r) = online_resolution(config.t);
    let grid = lambda_grid(lmin, lmax, r);
    let mut knot_rng = rng_from_seed(derive_seed(seed, u64::MAX));
    let audit_rounds: Vec<usize> = (0..config.t).filter(|s| s % config.audit_stride == 0).collect();
    let mut surrogate_losses: Vec<Vec<f64>> = Vec::with_capacity(config.t);
    let mut true_losses: Vec<Option<Vec<f64>>> = Vec::with_capacity(config.t);
    let h = config.h_loss;
    let run = hedge(grid.len(), config.t, config.eta, h, seed, false, |s| {
        let Instance::LogReg(inst) = generator.generate(derive_seed(stream_seed, s as u64))? else {
            unreachable!("checked above");
        };
        let sur = online_surrogate(&inst, eps, lmin, lmax, config.penalty, &mut knot_rng)?;
        let losses: Vec<f64> = grid.iter().map(|&l| sur.eval(l)).collect();
        true_losses.push(if s % config.audit_stride == 0 {
            Some(true_val_losses(&inst, &grid, config.penalty)?)
        } else {
            None
        });
        let utilities = losses.iter().map(|&v| h - v).collect();
        surrogate_losses.push(losses);
        Ok(utilities)
    })?;
    let all: Vec<usize> = (0..config.t).collect();
    let surrogate_regret = loss_regret(&surrogate_losses, &run.choices, &all);
    let audit_surrogate_regret = loss_regret(&surrogate_losses, &run.choices, &audit_rounds);
    let exact: Vec<Vec<f64>> = true_losses.iter().map(|o| o.clone().unwrap_or_default()).collect();
    let audit_true_regret = loss_regret(&exact, &run.choices, &audit_rounds);
    let audit_gaps = audit_rounds
        .iter()
        .map(|&s| {
            exact[s]
                .iter()
                .zip(&surrogate_losses[s])
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
        })
        .collect();
    debug!("online logreg: eps {eps}, r {r}, {} grid points, surrogate regret {surrogate_regret}", grid.len());
    Ok(OnlineLogRegRun {
        run,
        eps,
        r,
        grid,
        surrogate_regret,
        audit_rounds,
        audit_surrogate_regret,
        audit_true_regret,
        audit_gaps,
    })
}

/// Jump locations of a scalar curve on `[lo, hi]`.
///
/// Adjacent scan values differing by more than `l_lip * step + 1e-9` mark a
/// jump, which is bisected to a bracket of width at most [`JUMP_TOL`]; the
/// bracket midpoint is returned. At most one jump is reported per scan cell.
pub fn locate_discontinuities<F>(curve: F, lo: f64, hi: f64, resolution: usize, l_lip: f64) -> Result<Vec<f64>>
where
    F: Fn(f64) -> Result<f64>,
{
    if !(lo < hi && lo.is_finite() && hi.is_finite()) {
        return Err(Error::invalid("lo/hi", format!("need finite lo < hi, got ({lo}, {hi})")));
    }
    if resolution < 2 {
        return Err(Error::invalid("resolution", "need at least 2 scan points"));
    }
    if !(l_lip >= 0.0) {
        return Err(Error::invalid("L_lip", "must be nonnegative"));
    }
    let xs = linspace(lo, hi, resolution);
    let vals: Vec<f64> = xs.iter().map(|&x| curve(x)).collect::<Result<_>>()?;
    let jumps = |a: f64, va: f64, b: f64, vb: f64| (vb - va).abs() > l_lip * (b - a) + JUMP_SLACK;
    let mut out = Vec::new();
    for i in 0..xs.len() - 1 {
        let (mut a, mut va, mut b) = (xs[i], vals[i], xs[i + 1]);
        if !jumps(a, va, b, vals[i + 1]) {
            continue;
        }
        while b - a > JUMP_TOL {
            let m = 0.5 * (a + b);
            if m <= a || m >= b {
                break;
            }
            let vm = curve(m)?;
            if jumps(a, va, m, vm) {
                b = m;
            } else {
                a = m;
                va = vm;
            }
        }
        out.push(0.5 * (a + b));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DispersionReport {
    pub eps_list: Vec<f64>,
    pub max_counts: Vec<usize>,
    /// `max_count / (ε T)`.
    pub ratios: Vec<f64>,
    pub t: usize,
    pub lo: f64,
    pub hi: f64,
    pub locations: Vec<Vec<f64>>,
}

/// Largest number of distinct rounds with a jump inside one closed window of
/// width `eps`, over all window positions.
pub fn max_window_count(locations: &[Vec<f64>], eps: f64, lo: f64, hi: f64) -> usize {
    let mut events: Vec<(f64, usize)> = locations
        .iter()
        .enumerate()
        .flat_map(|(r, locs)| locs.iter().filter(|&&x| x >= lo && x <= hi).map(move |&x| (x, r)))
        .collect();
    events.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut per_round = vec![0usize; locations.len()];
    let (mut distinct, mut best, mut j) = (0usize, 0usize, 0usize);
    for i in 0..events.len() {
        while j < events.len() && events[j].0 <= events[i].0 + eps {
            if per_round[events[j].1] == 0 {
                distinct += 1;
            }
            per_round[events[j].1] += 1;
            j += 1;
        }
        best = best.max(distinct);
        per_round[events[i].1] -= 1;
        if per_round[events[i].1] == 0 {
            distinct -= 1;
        }
    }
    best
}

pub fn estimate_dispersion(locations: Vec<Vec<f64>>, eps_list: &[f64], lo: f64, hi: f64) -> Result<DispersionReport> {
    if !(lo < hi) {
        return Err(Error::invalid("lo/hi", format!("need lo < hi, got ({lo}, {hi})")));
    }
    if let Some(&bad) = eps_list.iter().find(|&&e| !(e > 0.0 && e.is_finite())) {
        return Err(Error::invalid("eps", format!("window widths must be positive, got {bad}")));
    }
    let t = locations.len();
    let max_counts: Vec<usize> = eps_list.iter().map(|&e| max_window_count(&locations, e, lo, hi)).collect();
    let ratios = eps_list
        .iter()
        .zip(&max_counts)
        .map(|(&e, &c)| if t == 0 { 0.0 } else { c as f64 / (e * t as f64) })
        .collect();
    Ok(DispersionReport {
        eps_list: eps_list.to_vec(),
        max_counts,
        ratios,
        t,
        lo,
        hi,
        locations,
    })
}

/// Scan settings for clustering-utility discontinuities over the scalar exponent.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanConfig {
    pub lo: f64,
    pub hi: f64,
    pub resolution: usize,
    pub objective: PruneObjective,
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig { lo: 0.5, hi: 4.0, resolution: 2000, objective: PruneObjective::Hamming }
    }
}

/// Discontinuities of the M1 utility (`β` uniform) for rounds `0..t` of a clustering stream.
pub fn clustering_stream_discontinuities(
    generator: &GeneratorSpec,
    t: usize,
    stream_seed: u64,
    scan: &ScanConfig,
) -> Result<Vec<Vec<f64>>> {
    if !matches!(generator, GeneratorSpec::Clustering { .. }) {
        return Err(Error::invalid("generator.task", "dispersion scans need a clustering generator"));
    }
    (0..t)
        .into_par_iter()
        .map(|s| {
            let Instance::Clustering(c) = generator.generate(derive_seed(stream_seed, s as u64))? else {
                unreachable!("checked above");
            };
            let beta = Simplex::uniform(c.num_metrics());
            locate_discontinuities(
                |a| clustering_utility_with(&c, &MergeFamily::MinMax { alpha: a }, &beta, scan.objective),
                scan.lo,
                scan.hi,
                scan.resolution,
                0.0,
            )
        })
        .collect()
}

/// Located jumps with no enumerated M1 boundary within `tol`.
pub fn unexplained_jumps(instance: &Instance, located: &[f64], lo: f64, hi: f64, tol: f64) -> Result<Vec<f64>> {
    let Instance::Clustering(c) = instance else {
        return Err(Error::invalid("instance", "need a clustering instance"));
    };
    let roots = enumerate_boundaries_m1(c, &Simplex::uniform(c.num_metrics()), lo, hi)?;
    Ok(located
        .iter()
        .copied()
        .filter(|&x| {
            let i = roots.partition_point(|&r| r < x);
            let near = |k: usize| roots.get(k).is_some_and(|&r| (r - x).abs() <= tol);
            !(near(i) || (i > 0 && near(i - 1)))
        })
        .collect())
}
