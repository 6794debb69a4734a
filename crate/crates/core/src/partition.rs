//! Set partitions of `0..n` and their exhaustive enumeration.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Equivalence relation on `0..len` in canonical form: blocks sorted
/// internally and ordered by their minimum element.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Partition {
    len: usize,
    blocks: Vec<Vec<usize>>,
}

impl Partition {
    pub fn singletons(n: usize) -> Self {
        Partition { len: n, blocks: (0..n).map(|x| vec![x]).collect() }
    }

    pub fn full(n: usize) -> Self {
        Partition { len: n, blocks: if n == 0 { vec![] } else { vec![(0..n).collect()] } }
    }

    /// From a label per element; equal labels share a block.
    pub fn from_labels(labels: &[usize]) -> Self {
        let mut order: Vec<usize> = Vec::new();
        let mut blocks: Vec<Vec<usize>> = Vec::new();
        for (x, &l) in labels.iter().enumerate() {
            match order.iter().position(|&o| o == l) {
                Some(i) => blocks[i].push(x),
                None => {
                    order.push(l);
                    blocks.push(vec![x]);
                }
            }
        }
        Partition { len: labels.len(), blocks }
    }

    pub fn from_blocks(n: usize, blocks: Vec<Vec<usize>>) -> Result<Self> {
        let mut labels = vec![usize::MAX; n];
        for (i, block) in blocks.iter().enumerate() {
            if block.is_empty() {
                return Err(Error::GroundSetMismatch("empty block".into()));
            }
            for &x in block {
                if x >= n {
                    return Err(Error::GroundSetMismatch(format!("element {x} outside 0..{n}")));
                }
                if labels[x] != usize::MAX {
                    return Err(Error::GroundSetMismatch(format!("element {x} in two blocks")));
                }
                labels[x] = i;
            }
        }
        if let Some(x) = labels.iter().position(|&l| l == usize::MAX) {
            return Err(Error::GroundSetMismatch(format!("element {x} not covered")));
        }
        Ok(Partition::from_labels(&labels))
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    /// Block index of every element.
    pub fn labels(&self) -> Vec<usize> {
        let mut out = vec![0; self.len];
        for (i, block) in self.blocks.iter().enumerate() {
            for &x in block {
                out[x] = i;
            }
        }
        out
    }

    pub fn block_of(&self, x: usize) -> usize {
        self.blocks.iter().position(|b| b.binary_search(&x).is_ok()).expect("element in ground set")
    }

    pub fn related(&self, x: usize, y: usize) -> bool {
        self.block_of(x) == self.block_of(y)
    }

    /// Neither all singletons nor a single block.
    pub fn is_trivial(&self) -> bool {
        self.blocks.len() == self.len || self.blocks.len() <= 1
    }

    /// Every block of `self` lies inside a block of `other`.
    pub fn refines(&self, other: &Partition) -> bool {
        let labels = other.labels();
        self.len == other.len && self.blocks.iter().all(|b| b.iter().all(|&x| labels[x] == labels[b[0]]))
    }

    /// Image under a permutation of the ground set.
    pub fn map(&self, perm: &[usize]) -> Partition {
        let labels = self.labels();
        let mut image = vec![0; self.len];
        for x in 0..self.len {
            image[perm[x]] = labels[x];
        }
        Partition::from_labels(&image)
    }

    pub fn is_invariant(&self, perm: &[usize]) -> bool {
        &self.map(perm) == self
    }

    /// Restriction to `subset` (re-indexed by position in `subset`).
    pub fn restrict(&self, subset: &[usize]) -> Partition {
        let labels = self.labels();
        Partition::from_labels(&subset.iter().map(|&x| labels[x]).collect::<Vec<_>>())
    }

    pub fn to_json(&self, names: &[String]) -> RelationJson {
        RelationJson {
            blocks: self
                .blocks
                .iter()
                .map(|b| b.iter().map(|&x| names[x].clone()).collect())
                .collect(),
        }
    }

    pub fn from_json(json: &RelationJson, names: &[String]) -> Result<Self> {
        let mut blocks = Vec::with_capacity(json.blocks.len());
        for block in &json.blocks {
            let mut ids = Vec::with_capacity(block.len());
            for name in block {
                let id = names
                    .iter()
                    .position(|n| n == name)
                    .ok_or_else(|| Error::GroundSetMismatch(format!("unknown element {name:?}")))?;
                ids.push(id);
            }
            blocks.push(ids);
        }
        Partition::from_blocks(names.len(), blocks)
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .blocks
            .iter()
            .map(|b| format!("{{{}}}", b.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")))
            .collect();
        write!(f, "{{{}}}", parts.join(","))
    }
}

/// Wire format `{"blocks":[["p/q",..],..]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationJson {
    pub blocks: Vec<Vec<String>>,
}

/// Restricted-growth strings of length `n` in lexicographic order.
#[derive(Debug, Clone)]
pub struct RestrictedGrowth {
    current: Vec<usize>,
    maxes: Vec<usize>,
    done: bool,
}

impl RestrictedGrowth {
    pub fn new(n: usize) -> Self {
        RestrictedGrowth { current: vec![0; n], maxes: vec![0; n], done: false }
    }

    fn advance(&mut self) {
        let n = self.current.len();
        let mut i = n;
        while i > 1 {
            i -= 1;
            if self.current[i] <= self.maxes[i - 1] {
                self.current[i] += 1;
                self.maxes[i] = self.maxes[i - 1].max(self.current[i]);
                for j in i + 1..n {
                    self.current[j] = 0;
                    self.maxes[j] = self.maxes[i];
                }
                return;
            }
        }
        self.done = true;
    }
}

impl Iterator for RestrictedGrowth {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let out = self.current.clone();
        if self.current.len() <= 1 {
            self.done = true;
        } else {
            self.advance();
        }
        Some(out)
    }
}

/// Bell number `B(n)` (number of partitions of an `n`-set).
pub fn bell(n: usize) -> u128 {
    let mut row = vec![1u128];
    for _ in 0..n {
        let mut next = vec![*row.last().unwrap()];
        for &x in &row {
            let v = next.last().unwrap() + x;
            next.push(v);
        }
        row = next;
    }
    row[0]
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn bell_numbers() {
        let counts: Vec<u128> = (0..9).map(bell).collect();
        assert_eq!(counts, [1, 1, 2, 5, 15, 52, 203, 877, 4140]);
        for n in 0..9 {
            assert_eq!(RestrictedGrowth::new(n).count() as u128, bell(n), "n={n}");
        }
    }

    #[test]
    fn canonical_form() {
        let p = Partition::from_blocks(5, vec![vec![4, 1], vec![3, 0], vec![2]]).unwrap();
        assert_eq!(p.blocks(), [vec![0, 3], vec![1, 4], vec![2]]);
        assert_eq!(p.to_string(), "{{0,3},{1,4},{2}}");
        assert!(Partition::from_blocks(3, vec![vec![0, 1]]).is_err());
        assert!(Partition::from_blocks(3, vec![vec![0, 1], vec![1, 2]]).is_err());
        assert!(Partition::singletons(4).is_trivial());
        assert!(Partition::full(4).is_trivial());
        assert!(!p.is_trivial());
    }

    #[test]
    fn refinement_order() {
        let fine = Partition::from_labels(&[0, 0, 1, 2]);
        let coarse = Partition::from_labels(&[0, 0, 1, 1]);
        assert!(fine.refines(&coarse));
        assert!(!coarse.refines(&fine));
        assert!(Partition::singletons(4).refines(&fine));
        assert!(fine.refines(&Partition::full(4)));
    }

    #[test]
    fn json_round_trip() {
        let names: Vec<String> = ["0/1", "1/2", "1/4"].iter().map(|s| s.to_string()).collect();
        let p = Partition::from_labels(&[0, 1, 0]);
        let json = p.to_json(&names);
        assert_eq!(serde_json::to_string(&json).unwrap(), r#"{"blocks":[["0/1","1/4"],["1/2"]]}"#);
        assert_eq!(Partition::from_json(&json, &names).unwrap(), p);
    }

    proptest! {
        #[test]
        fn from_labels_is_canonical(labels in proptest::collection::vec(0usize..5, 0..9)) {
            let p = Partition::from_labels(&labels);
            let q = Partition::from_labels(&p.labels());
            prop_assert_eq!(&p, &q);
            for (x, &l) in labels.iter().enumerate() {
                for (y, &m) in labels.iter().enumerate() {
                    prop_assert_eq!(p.related(x, y), l == m);
                }
            }
            let mins: Vec<usize> = p.blocks().iter().map(|b| b[0]).collect();
            prop_assert!(mins.windows(2).all(|w| w[0] < w[1]));
        }

        #[test]
        fn rotation_invariance_is_consistent(shift in 0usize..6, labels in proptest::collection::vec(0usize..3, 6)) {
            let perm: Vec<usize> = (0..6).map(|x| (x + shift) % 6).collect();
            let p = Partition::from_labels(&labels);
            let image = p.map(&perm);
            for x in 0..6 {
                for y in 0..6 {
                    prop_assert_eq!(p.related(x, y), image.related(perm[x], perm[y]));
                }
            }
        }
    }
}
