use serde::{Deserialize, Serialize};

use super::merge::{Kernel, MergeFamily, PairStats};
use crate::error::{Error, Result};
use crate::instances::{combine_distance, ClusteringInstance, DistanceMatrix, Simplex};

/// One agglomeration step. Node ids `0..n` are leaves; merge `t` creates node `n + t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Merge {
    pub left: usize,
    pub right: usize,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterTree {
    pub n: usize,
    /// Chronological, exactly `n - 1` entries.
    pub merges: Vec<Merge>,
}

impl ClusterTree {
    pub fn num_nodes(&self) -> usize {
        2 * self.n - 1
    }

    pub fn root(&self) -> usize {
        self.num_nodes() - 1
    }

    pub fn children(&self, node: usize) -> Option<(usize, usize)> {
        (node >= self.n).then(|| {
            let m = &self.merges[node - self.n];
            (m.left, m.right)
        })
    }

    /// Sorted point set of every node, indexed by node id.
    pub fn node_points(&self) -> Vec<Vec<usize>> {
        let mut pts: Vec<Vec<usize>> = (0..self.n).map(|i| vec![i]).collect();
        for m in &self.merges {
            let mut joined = pts[m.left].clone();
            joined.extend_from_slice(&pts[m.right]);
            joined.sort_unstable();
            pts.push(joined);
        }
        pts
    }

    /// Merge list without distances; equal across runs that make the same decisions.
    pub fn topology(&self) -> Vec<(usize, usize)> {
        self.merges.iter().map(|m| (m.left, m.right)).collect()
    }
}

/// Matrices the family reads: the `beta`-combined matrix for M1/M2, all of them for M3.
pub fn family_distances(
    instance: &ClusteringInstance,
    family: &MergeFamily,
    beta: &Simplex,
) -> Result<Vec<DistanceMatrix>> {
    if family.is_multi_metric() {
        Ok(instance.distances.clone())
    } else {
        Ok(vec![combine_distance(beta, &instance.distances)?])
    }
}

pub fn build_tree(
    instance: &ClusteringInstance,
    family: &MergeFamily,
    beta: &Simplex,
) -> Result<ClusterTree> {
    let distances = family_distances(instance, family, beta)?;
    build_tree_from(&distances, family)
}

/// Greedy agglomeration over precomputed matrices.
///
/// Cross-cluster statistics are kept per active pair and combined on merge,
/// so each step is a scan over active pairs. Exact ties go to the pair whose
/// (smaller id, larger id) is lexicographically smallest.
pub fn build_tree_from(distances: &[DistanceMatrix], family: &MergeFamily) -> Result<ClusterTree> {
    let kernel = Kernel::new(family, distances)?;
    let n = distances[0].n();
    if n == 0 {
        return Err(Error::invalid("n", "empty instance"));
    }
    // slot -> cluster id; slots of merged-away clusters become None
    let mut ids: Vec<Option<usize>> = (0..n).map(Some).collect();
    let mut stats = vec![None::<PairStats>; n * n];
    let mut value = vec![f64::INFINITY; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let s = kernel.pair_stats(i, j)?;
            value[i * n + j] = kernel.value(&s);
            stats[i * n + j] = Some(s);
        }
    }
    let mut merges = Vec::with_capacity(n.saturating_sub(1));
    for step in 0..n.saturating_sub(1) {
        // (distance, (row, col), (cluster id i, cluster id j))
        #[allow(clippy::type_complexity)]
        let mut best: Option<(f64, (usize, usize), (usize, usize))> = None;
        for i in 0..n {
            let Some(id_i) = ids[i] else { continue };
            for j in (i + 1)..n {
                let Some(id_j) = ids[j] else { continue };
                let v = value[i * n + j];
                let key = (id_i.min(id_j), id_i.max(id_j));
                let better = match best {
                    None => true,
                    Some((bv, bkey, _)) => v < bv || (v == bv && key < bkey),
                };
                if better {
                    best = Some((v, key, (i, j)));
                }
            }
        }
        let (distance, (left, right), (si, sj)) = best.expect("at least two active clusters");
        merges.push(Merge { left, right, distance });
        // merged cluster lives in slot si
        ids[si] = Some(n + step);
        ids[sj] = None;
        for o in 0..n {
            if o == si || ids[o].is_none() {
                continue;
            }
            let at = |a: usize, b: usize| if a < b { a * n + b } else { b * n + a };
            let s_i = stats[at(si, o)].expect("active pair");
            let s_j = stats[at(sj, o)].expect("active pair");
            let s = s_i.union(&s_j);
            value[at(si, o)] = kernel.value(&s);
            stats[at(si, o)] = Some(s);
        }
    }
    Ok(ClusterTree { n, merges })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{gen_clustering, ClusteringGenerator};
    use crate::linkage::merge_distance;

    /// Recomputes every candidate merge distance from point sets at each step.
    fn naive_tree(d: &DistanceMatrix, family: &MergeFamily) -> Vec<(Vec<usize>, Vec<usize>)> {
        let mut clusters: Vec<Vec<usize>> = (0..d.n()).map(|i| vec![i]).collect();
        let mut out = Vec::new();
        while clusters.len() > 1 {
            let mut best = (f64::INFINITY, 0, 0);
            for i in 0..clusters.len() {
                for j in (i + 1)..clusters.len() {
                    let v = merge_distance(family, &clusters[i], &clusters[j], std::slice::from_ref(d)).unwrap();
                    if v < best.0 {
                        best = (v, i, j);
                    }
                }
            }
            let b = clusters.remove(best.2);
            let a = clusters.remove(best.1);
            out.push((a.clone(), b.clone()));
            let mut ab = a;
            ab.extend(b);
            ab.sort_unstable();
            clusters.push(ab);
        }
        out
    }

    #[test]
    fn two_points_merge_once() {
        let inst = gen_clustering(3, 2, 1, 2, 1.0, ClusteringGenerator::UniformSmooth).unwrap();
        for family in [
            MergeFamily::MinMax { alpha: 2.0 },
            MergeFamily::PowerMean { alpha: -1.0 },
            MergeFamily::Geometric { alpha: vec![1.5] },
        ] {
            let t = build_tree(&inst, &family, &Simplex::uniform(1)).unwrap();
            assert_eq!(t.merges.len(), 1);
            assert_eq!(t.topology(), vec![(0, 1)]);
        }
    }

    #[test]
    fn matches_naive_agglomeration() {
        for seed in 0..30 {
            let inst = gen_clustering(seed, 4 + (seed as usize % 4), 1, 2, 1.0, ClusteringGenerator::UniformSmooth).unwrap();
            let family = MergeFamily::PowerMean { alpha: 1.0 };
            let tree = build_tree(&inst, &family, &Simplex::uniform(1)).unwrap();
            let pts = tree.node_points();
            let got: Vec<(Vec<usize>, Vec<usize>)> = tree
                .merges
                .iter()
                .map(|m| (pts[m.left].clone(), pts[m.right].clone()))
                .collect();
            let expect = naive_tree(&inst.distances[0], &family);
            assert_eq!(got.len(), expect.len());
            for (g, e) in got.iter().zip(&expect) {
                let norm = |p: &(Vec<usize>, Vec<usize>)| {
                    let mut v = [p.0.clone(), p.1.clone()];
                    v.sort();
                    v
                };
                assert_eq!(norm(g), norm(e), "seed {seed}");
            }
        }
    }

    #[test]
    fn exact_ties_resolve_deterministically() {
        let d = DistanceMatrix::from_fn(5, |_, _| 0.5);
        let family = MergeFamily::MinMax { alpha: 1.0 };
        let a = build_tree_from(std::slice::from_ref(&d), &family).unwrap();
        let b = build_tree_from(std::slice::from_ref(&d), &family).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.merges[0].left, 0);
        assert_eq!(a.merges[0].right, 1);
    }

    #[test]
    fn internal_nodes_are_disjoint_unions() {
        let inst = gen_clustering(9, 12, 2, 3, 1.0, ClusteringGenerator::PlantedBlobs).unwrap();
        let t = build_tree(&inst, &MergeFamily::Geometric { alpha: vec![0.7, 1.1] }, &Simplex::uniform(2)).unwrap();
        assert_eq!(t.merges.len(), 11);
        let pts = t.node_points();
        for (s, m) in t.merges.iter().enumerate() {
            let (l, r) = (&pts[m.left], &pts[m.right]);
            assert!(l.iter().all(|x| !r.contains(x)));
            assert_eq!(pts[12 + s].len(), l.len() + r.len());
        }
        assert_eq!(pts[t.root()], (0..12).collect::<Vec<_>>());
    }
}
