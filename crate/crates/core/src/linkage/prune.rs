//! Optimal k-prunings of a cluster tree by dynamic programming.
//!
//! A k-pruning is a set of k tree nodes whose point sets partition the
//! leaves. Each table entry keeps the objective value together with the
//! sorted block-min ids of the pruning it describes; equal objective values
//! are resolved toward the lexicographically smallest id list.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::partition::Partition;
use super::tree::ClusterTree;
use crate::error::{Error, Result};
use crate::instances::DistanceMatrix;

/// Largest target size the Hamming objective handles (the DP enumerates label subsets).
pub const HAMMING_MAX_K: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum, Default)]
#[serde(rename_all = "kebab-case")]
pub enum PruneObjective {
    KCenter,
    KMedian,
    /// Minimize Hamming distance to the instance's target partition.
    #[default]
    Hamming,
}

fn merge_sorted(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        if a[i] <= b[j] {
            out.push(a[i]);
            i += 1;
        } else {
            out.push(b[j]);
            j += 1;
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

#[derive(Clone)]
struct Entry {
    score: f64,
    key: Vec<usize>,
    /// How the entry splits between children; `None` means the node is a single block.
    split: Option<usize>,
}

fn better(score: f64, key: &[usize], than: &Entry) -> bool {
    match score.total_cmp(&than.score) {
        Ordering::Less => true,
        Ordering::Greater => false,
        Ordering::Equal => key < than.key.as_slice(),
    }
}

/// k-median (sum) or k-center (max) block costs with their min-key selection.
fn block_costs(points: &[Vec<usize>], d: &DistanceMatrix, center: bool) -> Vec<f64> {
    points
        .iter()
        .map(|block| {
            block
                .iter()
                .map(|&c| {
                    let it = block.iter().map(|&x| d.get(c, x));
                    if center {
                        it.fold(0.0, f64::max)
                    } else {
                        it.sum()
                    }
                })
                .fold(f64::INFINITY, f64::min)
        })
        .collect()
}

fn collect_blocks<F>(tree: &ClusterTree, node: usize, j: usize, pick: &F, out: &mut Vec<usize>)
where
    F: Fn(usize, usize) -> Option<usize>,
{
    match pick(node, j) {
        None => out.push(node),
        Some(i) => {
            let (l, r) = tree.children(node).expect("split entries only on internal nodes");
            collect_blocks(tree, l, i, pick, out);
            collect_blocks(tree, r, j - i, pick, out);
        }
    }
}

/// Generic DP over (node, number of blocks). `block` returns the cost of a
/// node taken as one block, or `None` when it is not allowed; `combine` folds
/// two child scores. Returns the chosen nodes of the root's k-pruning.
fn dp_by_count(
    tree: &ClusterTree,
    k: usize,
    block: impl Fn(usize) -> Option<f64>,
    combine: impl Fn(f64, f64) -> f64,
) -> Option<Vec<usize>> {
    let nodes = tree.num_nodes();
    let mut sizes = vec![1usize; nodes];
    let mut mins: Vec<usize> = (0..nodes).map(|v| v.min(tree.n)).collect();
    let mut table: Vec<Vec<Option<Entry>>> = Vec::with_capacity(nodes);
    for v in 0..nodes {
        if let Some((l, r)) = tree.children(v) {
            sizes[v] = sizes[l] + sizes[r];
            mins[v] = mins[l].min(mins[r]);
        } else {
            mins[v] = v;
        }
        let cap = sizes[v].min(k);
        let mut row: Vec<Option<Entry>> = vec![None; cap + 1];
        row[1] = block(v).map(|score| Entry {
            score,
            key: vec![mins[v]],
            split: None,
        });
        if let Some((l, r)) = tree.children(v) {
            for j in 2..=cap {
                for i in 1..j {
                    let (Some(Some(el)), Some(Some(er))) = (table[l].get(i), table[r].get(j - i)) else {
                        continue;
                    };
                    let score = combine(el.score, er.score);
                    let key = merge_sorted(&el.key, &er.key);
                    let replace = match &row[j] {
                        None => true,
                        Some(cur) => better(score, &key, cur),
                    };
                    if replace {
                        row[j] = Some(Entry { score, key, split: Some(i) });
                    }
                }
            }
        }
        table.push(row);
    }
    let root = tree.root();
    table[root].get(k)?.as_ref()?;
    let mut out = Vec::with_capacity(k);
    let pick = |v: usize, j: usize| table[v][j].as_ref().and_then(|e| e.split);
    collect_blocks(tree, root, k, &pick, &mut out);
    Some(out)
}

/// Max-overlap DP against a target with exactly `k` blocks, over label subsets.
fn hamming_prune(tree: &ClusterTree, points: &[Vec<usize>], target: &Partition) -> Vec<usize> {
    let k = target.num_blocks();
    let full = (1usize << k) - 1;
    let mut label = vec![0usize; tree.n];
    for (c, block) in target.blocks().iter().enumerate() {
        for &i in block {
            label[i] = c;
        }
    }
    let nodes = tree.num_nodes();
    // score is negated overlap so smaller is better, matching `better`
    let mut table: Vec<Vec<Option<Entry>>> = Vec::with_capacity(nodes);
    for v in 0..nodes {
        let size = points[v].len();
        let mut row: Vec<Option<Entry>> = vec![None; full + 1];
        let mut counts = vec![0usize; k];
        for &i in &points[v] {
            counts[label[i]] += 1;
        }
        for (c, &cnt) in counts.iter().enumerate() {
            row[1 << c] = Some(Entry {
                score: -(cnt as f64),
                key: vec![points[v][0]],
                split: None,
            });
        }
        if let Some((l, r)) = tree.children(v) {
            for s in 1..=full {
                let bits = s.count_ones() as usize;
                if bits < 2 || bits > size {
                    continue;
                }
                // proper nonempty subsets s1 of s
                let mut s1 = (s - 1) & s;
                while s1 > 0 {
                    let s2 = s ^ s1;
                    if let (Some(el), Some(er)) = (&table[l][s1], &table[r][s2]) {
                        let score = el.score + er.score;
                        let key = merge_sorted(&el.key, &er.key);
                        let replace = match &row[s] {
                            None => true,
                            Some(cur) => better(score, &key, cur),
                        };
                        if replace {
                            row[s] = Some(Entry { score, key, split: Some(s1) });
                        }
                    }
                    s1 = (s1 - 1) & s;
                }
            }
        }
        table.push(row);
    }
    let mut out = Vec::with_capacity(k);
    let pick = |v: usize, s: usize| table[v][s].as_ref().and_then(|e| e.split);
    fn walk<F: Fn(usize, usize) -> Option<usize>>(tree: &ClusterTree, v: usize, s: usize, pick: &F, out: &mut Vec<usize>) {
        match pick(v, s) {
            None => out.push(v),
            Some(s1) => {
                let (l, r) = tree.children(v).expect("internal");
                walk(tree, l, s1, pick, out);
                walk(tree, r, s ^ s1, pick, out);
            }
        }
    }
    walk(tree, tree.root(), full, &pick, &mut out);
    out
}

/// Cuts `tree` into `k` subtrees minimizing `objective`.
///
/// `distances` feeds k-center / k-median; `target` is required for Hamming,
/// which also needs `target.num_blocks() == k`.
pub fn prune_tree(
    tree: &ClusterTree,
    k: usize,
    objective: PruneObjective,
    distances: &DistanceMatrix,
    target: Option<&Partition>,
) -> Result<Partition> {
    if k == 0 || k > tree.n {
        return Err(Error::invalid(
            "k",
            format!("must be between 1 and the number of leaves {}", tree.n),
        ));
    }
    let points = tree.node_points();
    let chosen = match objective {
        PruneObjective::KMedian => {
            let cost = block_costs(&points, distances, false);
            dp_by_count(tree, k, |v| Some(cost[v]), |a, b| a + b)
        }
        PruneObjective::KCenter => {
            let cost = block_costs(&points, distances, true);
            let best = dp_by_count(tree, k, |v| Some(cost[v]), f64::max).expect("k <= leaves");
            let optimum = best.iter().map(|&v| cost[v]).fold(0.0, f64::max);
            // second pass: smallest key among prunings achieving the optimum
            dp_by_count(tree, k, |v| (cost[v] <= optimum).then_some(0.0), |_, _| 0.0)
        }
        PruneObjective::Hamming => {
            let target = target.ok_or_else(|| Error::invalid("target", "Hamming pruning needs a target partition"))?;
            if target.n() != tree.n {
                return Err(Error::invalid("target", "ground set differs from the tree's leaves"));
            }
            if target.num_blocks() != k {
                return Err(Error::invalid(
                    "k",
                    format!("Hamming pruning needs k equal to the target's {} blocks", target.num_blocks()),
                ));
            }
            if k > HAMMING_MAX_K {
                return Err(Error::invalid("k", format!("Hamming pruning supports k <= {HAMMING_MAX_K}")));
            }
            Some(hamming_prune(tree, &points, target))
        }
    }
    .expect("a k-pruning exists for k <= leaves");
    Partition::new(chosen.iter().map(|&v| points[v].clone()).collect(), tree.n)
}
