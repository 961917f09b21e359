//! Property tests for the structural invariants of each module.

use ddtune::bounds::{pdim_partition, pdim_pfaffian_gj, pdim_piecewise};
use ddtune::instances::{
    combine_distance, gen_clustering, gen_logreg, gen_ssl, ClusteringGenerator, DistanceMatrix, GeneratorSpec,
    Instance, Simplex,
};
use ddtune::linkage::{boundary_root_m1, build_tree_from, hamming_loss, merge_distance, MergeFamily, Partition};
use ddtune::logreg::{solve_rlr, Penalty};
use ddtune::online::{estimate_dispersion, hedge, locate_discontinuities};
use ddtune::ssl::{build_rbf_graph, harmonic_solve, harmonic_system};
use num_bigint::BigUint;
use proptest::prelude::*;

fn matrix(n: usize, entries: &[f64]) -> DistanceMatrix {
    // row-major upper triangle
    let at = |i: usize, j: usize| i * n - i * (i + 1) / 2 + (j - i - 1);
    DistanceMatrix::from_fn(n, |i, j| match i.cmp(&j) {
        std::cmp::Ordering::Less => entries[at(i, j)],
        std::cmp::Ordering::Greater => entries[at(j, i)],
        std::cmp::Ordering::Equal => 0.0,
    })
}

fn pairs(n: usize) -> usize {
    n * (n - 1) / 2
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn combine_is_linear_in_beta(
        d1 in prop::collection::vec(0.01f64..1.0, pairs(5)),
        d2 in prop::collection::vec(0.01f64..1.0, pairs(5)),
        w1 in 0.0f64..1.0,
        w2 in 0.0f64..1.0,
        a in 0.0f64..=1.0,
    ) {
        let ds = vec![matrix(5, &d1), matrix(5, &d2)];
        let b1 = Simplex::new(vec![w1, 1.0 - w1]).unwrap();
        let b2 = Simplex::new(vec![w2, 1.0 - w2]).unwrap();
        let mix = Simplex::new(vec![a * w1 + (1.0 - a) * w2, 1.0 - (a * w1 + (1.0 - a) * w2)]).unwrap();
        let (c1, c2, cm) = (
            combine_distance(&b1, &ds).unwrap(),
            combine_distance(&b2, &ds).unwrap(),
            combine_distance(&mix, &ds).unwrap(),
        );
        for i in 0..5 {
            for j in 0..5 {
                let want = a * c1.get(i, j) + (1.0 - a) * c2.get(i, j);
                prop_assert!((cm.get(i, j) - want).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn power_mean_is_nondecreasing_in_alpha(
        entries in prop::collection::vec(0.01f64..1.0, pairs(6)),
        split in 1usize..6,
    ) {
        let d = vec![matrix(6, &entries)];
        let a: Vec<usize> = (0..split).collect();
        let b: Vec<usize> = (split..6).collect();
        let mut prev = f64::NEG_INFINITY;
        for alpha in [-8.0, -2.0, -1.0, 1.0, 2.0, 8.0] {
            let v = merge_distance(&MergeFamily::PowerMean { alpha }, &a, &b, &d).unwrap();
            prop_assert!(v >= prev * (1.0 - 1e-12), "alpha {alpha}: {v} < {prev}");
            prev = v;
        }
    }

    #[test]
    fn trees_are_scale_equivariant(
        entries in prop::collection::vec(0.01f64..1.0, pairs(7)),
        c in 0.05f64..20.0,
        alpha in prop::sample::select(vec![-4.0, -1.0, 0.5, 1.0, 3.0, f64::INFINITY]),
    ) {
        let d = matrix(7, &entries);
        let scaled = d.scaled(c);
        for family in [MergeFamily::MinMax { alpha }, MergeFamily::PowerMean { alpha }] {
            let t1 = build_tree_from(std::slice::from_ref(&d), &family).unwrap();
            let t2 = build_tree_from(std::slice::from_ref(&scaled), &family).unwrap();
            prop_assert_eq!(t1.topology(), t2.topology());
        }
    }

    #[test]
    fn hamming_is_symmetric_and_quantized(
        a in prop::collection::vec(0usize..3, 8),
        b in prop::collection::vec(0usize..3, 8),
    ) {
        let (p, y) = (Partition::from_labels(&a).unwrap(), Partition::from_labels(&b).unwrap());
        let (h1, h2) = (hamming_loss(&p, &y).unwrap(), hamming_loss(&y, &p).unwrap());
        prop_assert_eq!(h1, h2);
        let scaled = h1 * 8.0;
        prop_assert!((scaled - scaled.round()).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&h1));
    }

    #[test]
    fn boundary_root_is_unique_and_accurate(
        d in prop::array::uniform4(0.05f64..1.0),
    ) {
        let g = |a: f64| d[0].powf(a) + d[1].powf(a) - d[2].powf(a) - d[3].powf(a);
        let xs: Vec<f64> = (1..10_000).map(|i| 32.0 * i as f64 / 10_000.0).collect();
        let signs: Vec<f64> = xs.iter().map(|&a| g(a)).filter(|v| *v != 0.0).map(f64::signum).collect();
        let changes = signs.windows(2).filter(|w| w[0] != w[1]).count();
        prop_assert!(changes <= 1);
        let root = boundary_root_m1(d[0], d[1], d[2], d[3], 1e-9, 32.0).unwrap();
        if let Some(r) = root {
            let h = 1e-8;
            prop_assert!(g(r - h) * g(r + h) <= 0.0 || g(r).abs() < 1e-12, "root {r} not bracketed");
        } else {
            prop_assert_eq!(changes, 0);
        }
    }

    #[test]
    fn bounds_are_monotone_in_every_argument(
        d in 1u64..6, q in 0u64..6, m in 0u64..6, delta in 1u64..6,
        k in 1u64..1000, kf in 1u64..1000, kg in 1u64..1000,
        which in 0usize..7,
    ) {
        let big = BigUint::from;
        let bump = |i: usize, v: u64| if i == which { v + 1 } else { v };
        let base_gj = pdim_pfaffian_gj(d, q, m, delta, &big(k)).unwrap();
        let up_gj = pdim_pfaffian_gj(bump(0, d), bump(1, q), bump(2, m), bump(3, delta), &big(bump(4, k))).unwrap();
        prop_assert!(up_gj >= base_gj);
        let base_pw = pdim_piecewise(d, q, m, delta, &big(kf), &big(kg)).unwrap();
        let up_pw = pdim_piecewise(bump(0, d), bump(1, q), bump(2, m), bump(3, delta), &big(bump(5, kf)), &big(bump(6, kg)))
            .unwrap();
        prop_assert!(up_pw >= base_pw);
        let base_pt = pdim_partition(d, q, m, delta, &big(k)).unwrap();
        let up_pt = pdim_partition(bump(0, d), bump(1, q), bump(2, m), bump(3, delta), &big(bump(4, k))).unwrap();
        prop_assert!(up_pt >= base_pt);
    }

    #[test]
    fn piecewise_equals_gj_with_summed_count(
        d in 1u64..20, q in 0u64..20, m in 0u64..20, delta in 1u64..20,
        kf in 1u64..u64::MAX / 2, kg in 1u64..u64::MAX / 2,
    ) {
        let sum = BigUint::from(kf) + BigUint::from(kg);
        let a = pdim_piecewise(d, q, m, delta, &BigUint::from(kf), &BigUint::from(kg)).unwrap();
        let b = pdim_pfaffian_gj(d, q, m, delta, &sum).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn l2_solution_norm_shrinks_with_lambda(seed in any::<u64>()) {
        let inst = gen_logreg(seed, 30, 4, 10, 2.0).unwrap();
        let mut prev = f64::INFINITY;
        for i in 0..40 {
            let lam = 0.02 + 0.05 * i as f64;
            let n = solve_rlr(&inst.x, &inst.y, lam, Penalty::L2).unwrap().norm();
            prop_assert!(n <= prev + 1e-9, "norm rose at lambda {lam}: {n} > {prev}");
            prev = n;
        }
    }

    #[test]
    fn instance_json_round_trip_is_identity(
        seed in any::<u64>(),
        kind in 0usize..3,
    ) {
        let spec = match kind {
            0 => GeneratorSpec::Clustering { n: 7, l: 2, k: 3, r: 1.0, generator: ClusteringGenerator::UniformSmooth },
            1 => GeneratorSpec::Ssl { n_labeled: 3, n_unlabeled: 5, l: 2, r: 1.0 },
            _ => GeneratorSpec::Logreg { m: 8, p: 3, m_val: 5, signal: 1.0 },
        };
        let inst = spec.generate(seed).unwrap();
        let text = serde_json::to_string(&inst.to_json()).unwrap();
        let back = Instance::from_json(&serde_json::from_str(&text).unwrap()).unwrap();
        prop_assert_eq!(&back, &inst);
        prop_assert_eq!(serde_json::to_string(&back.to_json()).unwrap(), text);
    }

    #[test]
    fn harmonic_solution_obeys_maximum_principle(
        seed in any::<u64>(),
        n_labeled in 2usize..12,
        n_unlabeled in 1usize..60,
        sigma in 0.2f64..3.0,
    ) {
        let inst = gen_ssl(seed, n_labeled, n_unlabeled, 2, 1.0).unwrap();
        let beta = Simplex::uniform(2);
        let g = build_rbf_graph(&inst, sigma, &beta).unwrap();
        let f_l: Vec<f64> = inst.labeled.iter().map(|&(_, l)| f64::from(l)).collect();
        let f_u = harmonic_solve(&g, &f_l).unwrap();
        let lo = f_l.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = f_l.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        for &f in &f_u {
            prop_assert!(f >= lo - 1e-10 && f <= hi + 1e-10);
        }
        let (a, rhs) = harmonic_system(&g, &f_l).unwrap();
        let x = nalgebra::DVector::from_vec(f_u);
        let resid = (&a * &x - &rhs).amax();
        prop_assert!(resid <= 1e-8 * rhs.amax().max(f64::MIN_POSITIVE));
    }

    #[test]
    fn zero_rate_hedge_ignores_utilities(
        table in prop::collection::vec(prop::collection::vec(0.0f64..1.0, 5), 30),
        seed in any::<u64>(),
    ) {
        let run = hedge(5, 30, Some(0.0), 1.0, seed, false, |s| Ok(table[s].clone())).unwrap();
        let flat = hedge(5, 30, Some(0.0), 1.0, seed, false, |_| Ok(vec![0.5; 5])).unwrap();
        prop_assert_eq!(run.choices, flat.choices);
    }

    #[test]
    fn window_counts_are_monotone_and_bounded(
        locs in prop::collection::vec(prop::collection::vec(0.0f64..1.0, 0..4), 1..40),
    ) {
        let eps = [0.005, 0.01, 0.05, 0.2, 1.0];
        let rep = estimate_dispersion(locs.clone(), &eps, 0.0, 1.0).unwrap();
        prop_assert!(rep.max_counts.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(rep.max_counts.iter().all(|&c| c <= locs.len()));
        let rounds_with_jumps = locs.iter().filter(|l| !l.is_empty()).count();
        prop_assert_eq!(rep.max_counts[4], rounds_with_jumps);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    /// Planted jumps at least two scan cells apart are all recovered to 1e-8.
    #[test]
    fn planted_steps_are_recovered(
        cells in prop::collection::btree_set(1usize..498, 1..8),
        offsets in prop::collection::vec(0.0f64..1.0, 8),
        heights in prop::collection::vec(0.1f64..2.0, 8),
    ) {
        let (lo, hi, res) = (0.0, 5.0, 500usize);
        let step = (hi - lo) / (res - 1) as f64;
        // keep one empty cell between plantings
        let mut chosen: Vec<usize> = Vec::new();
        for c in cells {
            if chosen.last().is_none_or(|&p| c >= p + 2) {
                chosen.push(c);
            }
        }
        let jumps: Vec<f64> = chosen
            .iter()
            .zip(&offsets)
            .map(|(&c, &o)| lo + step * (c as f64 + 0.01 + 0.98 * o))
            .collect();
        let curve = |x: f64| {
            Ok(jumps.iter().zip(&heights).filter(|(&j, _)| x >= j).map(|(_, &h)| h).sum::<f64>())
        };
        let found = locate_discontinuities(curve, lo, hi, res, 0.0).unwrap();
        prop_assert_eq!(found.len(), jumps.len());
        for (f, j) in found.iter().zip(&jumps) {
            prop_assert!((f - j).abs() <= 1e-8, "found {f}, planted {j}");
        }
    }
}

#[test]
fn generated_clusterings_keep_matrix_invariants() {
    for seed in 0..200u64 {
        let inst = gen_clustering(seed, 6, 2, 2, 1.0, ClusteringGenerator::UniformSmooth).unwrap();
        for d in &inst.distances {
            d.validate(1.0).unwrap();
        }
    }
}
