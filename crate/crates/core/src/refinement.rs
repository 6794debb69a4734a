//! One step of self-similar refinement, shared by the MS and graph-directed models.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::ConductanceForm;
use crate::partition::Partition;
use crate::unionfind::UnionFind;

/// A boundary set of size `boundary_len` refined into `vertex_count` vertices.
///
/// `copies[c][x]` is the refined vertex carrying boundary vertex `x` in copy `c`;
/// `boundary_ids[x]` is where boundary vertex `x` itself sits after refinement.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Refinement {
    pub boundary_len: usize,
    pub vertex_count: usize,
    pub copies: Vec<Vec<usize>>,
    pub boundary_ids: Vec<usize>,
}

impl Refinement {
    fn check(&self, form: &ConductanceForm) -> Result<()> {
        if form.len() != self.boundary_len {
            return Err(Error::VertexMismatch { expected: self.boundary_len, got: form.len() });
        }
        Ok(())
    }

    /// Sum of one relabelled copy of `form` per copy map.
    pub fn replicate(&self, form: &ConductanceForm) -> Result<ConductanceForm> {
        self.check(form)?;
        let mut out = ConductanceForm::zero(self.vertex_count);
        for copy in &self.copies {
            for (x, y, w) in form.edges() {
                out.add_weight(copy[x], copy[y], w);
            }
        }
        Ok(out)
    }

    /// Replication followed by reduction to the boundary image.
    pub fn renormalize(&self, form: &ConductanceForm) -> Result<ConductanceForm> {
        self.replicate(form)?.trace(&self.boundary_ids)
    }

    /// Per-copy restriction `h o copy_c` of a function on the refined vertices.
    pub fn pull_back(&self, copy: usize, h: &[f64]) -> Vec<f64> {
        self.copies[copy].iter().map(|&v| h[v]).collect()
    }

    /// Smallest equivalence on refined vertices merging, inside each copy,
    /// the images of every block of `relation`.
    pub fn closure(&self, relation: &Partition) -> Result<Partition> {
        if relation.len() != self.boundary_len {
            return Err(Error::GroundSetMismatch(format!(
                "relation on {} points, boundary has {}",
                relation.len(),
                self.boundary_len
            )));
        }
        let mut uf = UnionFind::new(self.vertex_count);
        self.merge_blocks(&mut uf, relation.blocks());
        Ok(Partition::from_labels(&uf.labels()))
    }

    fn merge_blocks(&self, uf: &mut UnionFind, blocks: &[Vec<usize>]) {
        for copy in &self.copies {
            for block in blocks {
                for pair in block.windows(2) {
                    uf.union(copy[pair[0]], copy[pair[1]]);
                }
            }
        }
    }

    /// The closure pulled back to the boundary through `boundary_ids`.
    pub fn restricted_closure(&self, relation: &Partition) -> Result<Partition> {
        let closure = self.closure(relation)?;
        let labels: Vec<usize> =
            self.boundary_ids.iter().map(|&v| closure.block_of(v)).collect();
        Ok(Partition::from_labels(&labels))
    }

    pub fn is_preserved(&self, relation: &Partition) -> Result<bool> {
        Ok(&self.restricted_closure(relation)? == relation)
    }

    /// Scratch-buffer variant of [`Refinement::is_preserved`] for enumeration loops.
    pub(crate) fn preserves_labels(&self, uf: &mut UnionFind, labels: &[usize]) -> bool {
        uf.reset();
        let nb = labels.iter().copied().max().map_or(0, |m| m + 1);
        let mut first = vec![usize::MAX; nb];
        for copy in &self.copies {
            first.iter_mut().for_each(|f| *f = usize::MAX);
            for (x, &b) in labels.iter().enumerate() {
                if first[b] == usize::MAX {
                    first[b] = copy[x];
                } else {
                    uf.union(first[b], copy[x]);
                }
            }
        }
        let roots: Vec<usize> = self.boundary_ids.iter().map(|&v| uf.find(v)).collect();
        for x in 0..labels.len() {
            for y in x + 1..labels.len() {
                if (labels[x] == labels[y]) != (roots[x] == roots[y]) {
                    return false;
                }
            }
        }
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Three triangles glued pairwise: the level-1 gasket.
    pub(crate) fn gasket() -> Refinement {
        Refinement {
            boundary_len: 3,
            vertex_count: 6,
            copies: vec![vec![0, 3, 5], vec![3, 1, 4], vec![5, 4, 2]],
            boundary_ids: vec![0, 1, 2],
        }
    }

    #[test]
    fn replicate_gasket() {
        let r = gasket();
        let rep = r.replicate(&ConductanceForm::complete(3, 1.0)).unwrap();
        assert_eq!(rep.edges().len(), 9);
        assert!(rep.edges().iter().all(|e| e.2 == 1.0));
        let t = r.renormalize(&ConductanceForm::complete(3, 1.0)).unwrap();
        assert!((t.weight(0, 1) - 0.6).abs() < 1e-14);
        assert!(r.replicate(&ConductanceForm::zero(4)).is_err());
    }

    #[test]
    fn energy_identity() {
        let r = gasket();
        let d = ConductanceForm::from_edges(3, &[(0, 1, 1.0), (1, 2, 2.0), (0, 2, 0.5)]).unwrap();
        let rep = r.replicate(&d).unwrap();
        let h = [0.3, -1.0, 2.0, 0.7, 0.1, -0.4];
        let per_copy: f64 =
            (0..3).map(|c| d.energy(&r.pull_back(c, &h)).unwrap()).sum();
        assert!((rep.energy(&h).unwrap() - per_copy).abs() < 1e-12);
    }

    #[test]
    fn gasket_relations() {
        let r = gasket();
        assert!(r.is_preserved(&Partition::singletons(3)).unwrap());
        assert!(r.is_preserved(&Partition::full(3)).unwrap());
        // Merging two corners merges them again through the shared middle vertex.
        let pair = Partition::from_labels(&[0, 0, 1]);
        assert!(r.is_preserved(&pair).unwrap());
        let mut uf = UnionFind::new(6);
        assert!(r.preserves_labels(&mut uf, &[0, 0, 1]));
        let ring = Refinement { boundary_len: 3, vertex_count: 4, copies: vec![vec![0, 3, 1], vec![3, 2, 1]], boundary_ids: vec![0, 1, 2] };
        let split = Partition::from_labels(&[0, 1, 0]);
        assert!(!ring.is_preserved(&split).unwrap());
        assert!(!ring.preserves_labels(&mut UnionFind::new(4), &[0, 1, 0]));
        assert!(r.preserves_labels(&mut uf, &[0, 1, 2]));
    }
}
