use pathfinding::prelude::{kuhn_munkres, Matrix};

use super::partition::Partition;
use crate::error::{Error, Result};

/// Largest block count solved by enumerating permutations.
const ENUMERATION_MAX_K: usize = 8;

/// `overlap[i][j] = |p_i ∩ y_j|`, padded with empty blocks to a square matrix.
fn overlap_matrix(p: &Partition, y: &Partition) -> Vec<Vec<i64>> {
    let k = p.num_blocks().max(y.num_blocks());
    let mut label = vec![0usize; y.n()];
    for (j, block) in y.blocks().iter().enumerate() {
        for &i in block {
            label[i] = j;
        }
    }
    let mut m = vec![vec![0i64; k]; k];
    for (i, block) in p.blocks().iter().enumerate() {
        for &x in block {
            m[i][label[x]] += 1;
        }
    }
    m
}

fn max_overlap_enumerate(m: &[Vec<i64>]) -> i64 {
    fn rec(m: &[Vec<i64>], row: usize, used: &mut [bool], acc: i64, best: &mut i64) {
        if row == m.len() {
            *best = (*best).max(acc);
            return;
        }
        for j in 0..m.len() {
            if !used[j] {
                used[j] = true;
                rec(m, row + 1, used, acc + m[row][j], best);
                used[j] = false;
            }
        }
    }
    let mut best = 0;
    rec(m, 0, &mut vec![false; m.len()], 0, &mut best);
    best
}

/// Fraction of points misassigned under the best matching of blocks.
///
/// Partitions with different block counts are padded with empty blocks.
/// The result is a multiple of `1/n`.
pub fn hamming_loss(p: &Partition, y: &Partition) -> Result<f64> {
    if p.n() != y.n() {
        return Err(Error::invalid(
            "partitions",
            format!("ground sets differ: {} vs {} points", p.n(), y.n()),
        ));
    }
    let n = p.n();
    if n == 0 {
        return Ok(0.0);
    }
    let m = overlap_matrix(p, y);
    let best = if m.len() <= ENUMERATION_MAX_K {
        max_overlap_enumerate(&m)
    } else {
        let weights = Matrix::from_rows(m).expect("square overlap matrix");
        kuhn_munkres(&weights).0
    };
    Ok((n as i64 - best) as f64 / n as f64)
}
