//! Paired numerical comparisons that need many instances.

use ddtune::instances::{derive_seed, gen_logreg, ClusteringGenerator, GeneratorSpec, Instance, LogRegInstance};
use ddtune::logreg::{fit_gap_constant, Penalty, GAP_SAFETY};
use ddtune::online::{online_logreg_run, OnlineLogRegConfig};
use ddtune::tune::{erm_tune, Axis, GridSpec, SearchMode, Sense, Task, TuneConfig};

fn clustering_batch(seed: u64) -> Vec<Instance> {
    let spec = GeneratorSpec::Clustering { n: 6, l: 1, k: 2, r: 1.0, generator: ClusteringGenerator::UniformSmooth };
    spec.sample(seed, 10).unwrap()
}

fn m1_config(search: SearchMode, points: usize) -> TuneConfig {
    let mut c = TuneConfig::new(Task::ClusteringM1);
    c.grid = GridSpec {
        alpha: Some(Axis { lo: 0.05, hi: 20.0, points, log: false }),
        negative_alpha: false,
        infinite_alpha: false,
        ..GridSpec::default()
    };
    c.search = search;
    c
}

/// Exact enumeration dominates both searches; bisection at equal budget
/// matches or beats the uniform grid on most batches.
#[test]
fn refine_against_grid_on_paired_batches() {
    let (lo, hi, budget) = (0.05, 20.0, 24);
    let mut refine_ok = 0;
    let mut rows = Vec::new();
    for b in 0..20u64 {
        let batch = clustering_batch(derive_seed(2024, b));
        let grid = erm_tune(&batch, &m1_config(SearchMode::Grid, budget)).unwrap();
        let refine = erm_tune(&batch, &m1_config(SearchMode::Refine { lo, hi, budget, beta: None }, budget)).unwrap();
        let exact = erm_tune(&batch, &m1_config(SearchMode::ExactM1 { lo, hi }, budget)).unwrap();
        let sense = grid.sense;
        for other in [&grid, &refine] {
            assert!(
                !beats(sense, other.train_utility, exact.train_utility),
                "batch {b}: {} beat exact {}",
                other.train_utility,
                exact.train_utility
            );
        }
        if !beats(sense, grid.train_utility, refine.train_utility) {
            refine_ok += 1;
        }
        rows.push((grid.train_utility, refine.train_utility, exact.train_utility));
    }
    println!("(grid, refine, exact) per batch: {rows:?}");
    assert!(refine_ok >= 14, "refine matched or beat grid on only {refine_ok}/20 batches");
}

/// `a` strictly better than `b` beyond summation rounding.
fn beats(sense: Sense, a: f64, b: f64) -> bool {
    sense.better(a, b) && (a - b).abs() > 1e-12
}

fn logreg_batch(seed: u64, count: u64) -> Vec<LogRegInstance> {
    (0..count).map(|i| gen_logreg(derive_seed(seed, i), 50, 5, 50, 1.0).unwrap()).collect()
}

/// A constant fitted on calibration instances at ε = 0.2 bounds the
/// surrogate gap on fresh instances at the finer resolutions.
#[test]
fn surrogate_gap_constant_transfers_to_finer_eps() {
    let (lmin, lmax) = (0.1, 1.1);
    let grid: Vec<f64> = (0..=200).map(|i| lmin + (lmax - lmin) * i as f64 / 200.0).collect();
    let cal = logreg_batch(77, 60);
    let c = GAP_SAFETY * fit_gap_constant(&cal, 0.2, lmin, lmax, Penalty::L2, &grid, 1).unwrap();
    let fresh = logreg_batch(78, 30);
    for eps in [0.1, 0.05] {
        let seen = fit_gap_constant(&fresh, eps, lmin, lmax, Penalty::L2, &grid, 2).unwrap();
        println!("eps {eps}: fresh max gap/eps^2 {seen:.4}, fitted C {c:.4}");
        assert!(seen <= c, "eps {eps}: {seen} > {c}");
    }
}

#[test]
fn online_regret_per_round_falls_with_horizon() {
    let generator = GeneratorSpec::Logreg { m: 30, p: 3, m_val: 30, signal: 1.0 };
    let per_round = |t: usize| {
        let cfg = OnlineLogRegConfig { t, audit_stride: t, ..OnlineLogRegConfig::default() };
        let run = online_logreg_run(&generator, &cfg, 900, 901).unwrap();
        run.surrogate_regret / t as f64
    };
    let (short, long) = (per_round(125), per_round(500));
    println!("Regret/T: T=125 {short:.5}, T=500 {long:.5}");
    assert!(long < short, "{long} >= {short}");
}
