use crate::error::{Error, Result};

/// Disjoint nonempty blocks covering `0..n`.
///
/// Normalized on construction: each block sorted ascending, blocks ordered by
/// their smallest element, so structurally equal partitions compare equal.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Partition {
    n: usize,
    blocks: Vec<Vec<usize>>,
}

impl Partition {
    pub fn new(mut blocks: Vec<Vec<usize>>, n: usize) -> Result<Self> {
        let mut seen = vec![false; n];
        for (b, block) in blocks.iter_mut().enumerate() {
            if block.is_empty() {
                return Err(Error::invalid(format!("block {b}"), "must be nonempty"));
            }
            for &i in block.iter() {
                if i >= n {
                    return Err(Error::invalid(
                        format!("block {b}"),
                        format!("point {i} outside 0..{n}"),
                    ));
                }
                if seen[i] {
                    return Err(Error::invalid(
                        format!("block {b}"),
                        format!("point {i} appears in more than one block"),
                    ));
                }
                seen[i] = true;
            }
            block.sort_unstable();
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return Err(Error::invalid("blocks", format!("point {i} is not covered")));
        }
        blocks.sort_by_key(|b| b[0]);
        Ok(Partition { n, blocks })
    }

    /// Block id of every point.
    pub fn from_labels(labels: &[usize]) -> Result<Self> {
        let k = labels.iter().max().map_or(0, |m| m + 1);
        let mut blocks = vec![Vec::new(); k];
        for (i, &l) in labels.iter().enumerate() {
            blocks[l].push(i);
        }
        blocks.retain(|b| !b.is_empty());
        Partition::new(blocks, labels.len())
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    /// Size of the ground set.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Smallest element of each block, ascending (the tie-break key for prunings).
    pub fn block_min_ids(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b[0]).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalizes_block_order() {
        let p = Partition::new(vec![vec![3, 2], vec![1, 0]], 4).unwrap();
        assert_eq!(p.blocks(), &[vec![0, 1], vec![2, 3]]);
        assert_eq!(p, Partition::from_labels(&[0, 0, 1, 1]).unwrap());
    }

    #[test]
    fn rejects_overlap_gap_and_empty() {
        assert!(Partition::new(vec![vec![0, 1], vec![1]], 2).is_err());
        assert!(Partition::new(vec![vec![0]], 2).is_err());
        assert!(Partition::new(vec![vec![0, 1], vec![]], 2).is_err());
        assert!(Partition::new(vec![vec![0, 5]], 2).is_err());
    }
}
