//! Linkage clustering: merge families, agglomeration, pruning and the Hamming utility.

mod boundary;
mod hamming;
pub(crate) mod merge;
mod partition;
mod prune;
mod tree;

pub use boundary::{boundary_root_m1, enumerate_boundaries_m1, DEDUP_TOL, ENUMERATION_MAX_N, ROOT_TOL};
pub use hamming::hamming_loss;
pub use merge::{merge_distance, MergeFamily, ALPHA_SNAP};
pub use partition::Partition;
pub use prune::{prune_tree, PruneObjective, HAMMING_MAX_K};
pub use tree::{build_tree, build_tree_from, family_distances, ClusterTree, Merge};

use crate::error::Result;
use crate::instances::{combine_distance, ClusteringInstance, DistanceMatrix, Simplex};

/// Matrix scored by the k-center / k-median objectives: `delta_beta` for
/// M1/M2, the uniform combination for M3 (which ignores `beta`).
pub fn objective_distances(
    instance: &ClusteringInstance,
    family: &MergeFamily,
    beta: &Simplex,
) -> Result<DistanceMatrix> {
    if family.is_multi_metric() {
        combine_distance(&Simplex::uniform(instance.num_metrics()), &instance.distances)
    } else {
        combine_distance(beta, &instance.distances)
    }
}

/// `1 - hamming(prune(build_tree(..)), target)` with the Hamming objective.
pub fn clustering_utility(instance: &ClusteringInstance, family: &MergeFamily, beta: &Simplex) -> Result<f64> {
    clustering_utility_with(instance, family, beta, PruneObjective::Hamming)
}

pub fn clustering_utility_with(
    instance: &ClusteringInstance,
    family: &MergeFamily,
    beta: &Simplex,
    objective: PruneObjective,
) -> Result<f64> {
    let tree = build_tree(instance, family, beta)?;
    let d = match objective {
        PruneObjective::Hamming => None,
        _ => Some(objective_distances(instance, family, beta)?),
    };
    let placeholder;
    let dref = match &d {
        Some(m) => m,
        None => {
            placeholder = DistanceMatrix::from_fn(0, |_, _| 0.0);
            &placeholder
        }
    };
    let p = prune_tree(&tree, instance.k, objective, dref, Some(&instance.target))?;
    Ok(1.0 - hamming_loss(&p, &instance.target)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{gen_clustering, ClusteringGenerator};

    #[test]
    fn two_points_always_recovered() {
        for seed in 0..5 {
            let inst = gen_clustering(seed, 2, 1, 2, 1.0, ClusteringGenerator::UniformSmooth).unwrap();
            for alpha in [-3.0, 0.5, 2.0, f64::INFINITY] {
                let u = clustering_utility(&inst, &MergeFamily::MinMax { alpha }, &Simplex::uniform(1)).unwrap();
                assert_eq!(u, 1.0);
            }
        }
    }

    #[test]
    fn far_blobs_are_recovered() {
        // two blobs: within 0.1, across 1.0
        let n = 6;
        let d = DistanceMatrix::from_fn(n, |i, j| if (i < 3) == (j < 3) { 0.1 } else { 1.0 });
        let target = Partition::new(vec![vec![0, 1, 2], vec![3, 4, 5]], n).unwrap();
        let inst = ClusteringInstance::new(vec![d], target, 1.0).unwrap();
        let u = clustering_utility(&inst, &MergeFamily::PowerMean { alpha: 1.0 }, &Simplex::uniform(1)).unwrap();
        assert_eq!(u, 1.0);
    }

    #[test]
    fn pipeline_matches_composed_steps() {
        for seed in 0..10 {
            let inst = gen_clustering(seed, 6, 1, 2, 1.0, ClusteringGenerator::UniformSmooth).unwrap();
            let fam = MergeFamily::PowerMean { alpha: 2.0 };
            let beta = Simplex::uniform(1);
            let tree = build_tree(&inst, &fam, &beta).unwrap();
            let p = prune_tree(&tree, 2, PruneObjective::Hamming, &inst.distances[0], Some(&inst.target)).unwrap();
            let expect = 1.0 - hamming_loss(&p, &inst.target).unwrap();
            assert_eq!(clustering_utility(&inst, &fam, &beta).unwrap(), expect);
        }
    }

    #[test]
    fn alternate_objectives_are_in_range() {
        let inst = gen_clustering(4, 8, 2, 3, 1.0, ClusteringGenerator::PlantedBlobs).unwrap();
        for obj in [PruneObjective::KCenter, PruneObjective::KMedian] {
            let u = clustering_utility_with(&inst, &MergeFamily::Geometric { alpha: vec![1.0, 1.0] }, &Simplex::uniform(2), obj)
                .unwrap();
            assert!((0.0..=1.0).contains(&u));
        }
    }
}
