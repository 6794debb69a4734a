//! The finite self-similar structure of an MS Julia set.
//!
//! Level `k` is `m+n` copies of level `k-1`. At junction `i` the copy of cell
//! `i` and the copy of cell `i+1` share the image of the glue point
//! `r_i = Phi_n(c_i)`, which becomes the critical point `c_i`. A boundary
//! angle `x` sits inside level 1 as `copy_{cell(x)}(Phi_n(x))`.

use std::collections::BTreeMap;

use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::angle::{Angle, AngleContext, ContextJson, MsValidity};
use crate::error::{Error, Result};
use crate::refinement::Refinement;
use crate::unionfind::UnionFind;

pub const DEFAULT_DEPTH_CAP: usize = 12;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MsStructure {
    ctx: AngleContext,
    boundary: Vec<Angle>,
    symmetrized: bool,
    glue_points: Vec<Angle>,
    glue_index: Vec<usize>,
    cell_of: Vec<usize>,
    phi_index: Vec<usize>,
    depth_cap: usize,
}

/// One level of the glued vertex sets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GluedVertexSet {
    pub level: usize,
    pub num_vertices: usize,
    /// `copies[i][v]`: level-`k` id of vertex `v` of level `k-1` inside copy `i` (0-based).
    /// Empty at level 0.
    pub copies: Vec<Vec<usize>>,
    /// Level-`(k-1)` ids to level-`k` ids; the identity at level 0.
    pub inclusion: Vec<usize>,
    /// Level-`k` ids of the boundary vertices.
    pub boundary_ids: Vec<usize>,
    /// `(copy, parent vertex, level-k id)` for both sides of every junction; copies 1-based.
    pub merges: Vec<[usize; 3]>,
}

impl MsStructure {
    pub fn build(ctx: AngleContext, symmetrize: bool) -> Result<Self> {
        let report = ctx.validate();
        if !report.valid {
            return Err(Error::InvalidMs(describe_invalid(&ctx, &report)));
        }
        let mut boundary: Vec<Angle> = ctx.post_critical_set().into_iter().collect();
        if symmetrize {
            let mut all: Vec<Angle> = boundary
                .iter()
                .flat_map(|&a| (0..ctx.cells() as i64).map(move |l| (a, l)))
                .map(|(a, l)| ctx.rotate(a, l))
                .collect();
            all.sort();
            all.dedup();
            boundary = all;
        }
        let index = |a: Angle| boundary.binary_search(&a).ok();
        let glue_points: Vec<Angle> = ctx.critical_angles().into_iter().map(|c| ctx.phi(c)).collect();
        let glue_index = glue_points
            .iter()
            .map(|&r| index(r).ok_or_else(|| Error::InvalidMs(format!("glue point {r} missing"))))
            .collect::<Result<Vec<_>>>()?;
        let mut cell_of = Vec::with_capacity(boundary.len());
        let mut phi_index = Vec::with_capacity(boundary.len());
        for &x in &boundary {
            cell_of.push(ctx.cell_index(x)?);
            let image = ctx.phi(x);
            phi_index.push(index(image).ok_or_else(|| {
                Error::InvalidMs(format!("boundary not forward invariant at {x}"))
            })?);
        }
        Ok(MsStructure {
            ctx,
            boundary,
            symmetrized: symmetrize,
            glue_points,
            glue_index,
            cell_of,
            phi_index,
            depth_cap: DEFAULT_DEPTH_CAP,
        })
    }

    pub fn with_depth_cap(mut self, cap: usize) -> Self {
        self.depth_cap = cap;
        self
    }

    pub fn ctx(&self) -> &AngleContext {
        &self.ctx
    }

    pub fn boundary(&self) -> &[Angle] {
        &self.boundary
    }

    pub fn len(&self) -> usize {
        self.boundary.len()
    }

    pub fn is_empty(&self) -> bool {
        self.boundary.is_empty()
    }

    pub fn symmetrized(&self) -> bool {
        self.symmetrized
    }

    pub fn cells(&self) -> usize {
        self.ctx.cells()
    }

    pub fn rotation_order(&self) -> usize {
        self.ctx.cells()
    }

    pub fn glue_points(&self) -> &[Angle] {
        &self.glue_points
    }

    /// Boundary index of `r_i` for `i = 1..m+n` (stored 0-based).
    pub fn glue_index(&self) -> &[usize] {
        &self.glue_index
    }

    /// 1-based cell of every boundary vertex.
    pub fn cell_of(&self) -> &[usize] {
        &self.cell_of
    }

    /// Boundary index of `Phi_n(x)` for every boundary vertex `x`.
    pub fn phi_index(&self) -> &[usize] {
        &self.phi_index
    }

    pub fn depth_cap(&self) -> usize {
        self.depth_cap
    }

    pub fn index_of(&self, a: Angle) -> Option<usize> {
        self.boundary.binary_search(&a).ok()
    }

    pub fn labels(&self) -> Vec<String> {
        self.boundary.iter().map(|a| a.to_string()).collect()
    }

    /// Looks up boundary indices for angle strings.
    pub fn indices_of(&self, angles: &[Angle]) -> Result<Vec<usize>> {
        let mut out = Vec::with_capacity(angles.len());
        for &a in angles {
            let i = self
                .index_of(a)
                .ok_or_else(|| Error::SubsetInvalid(format!("{a} is not a boundary vertex")))?;
            if out.contains(&i) {
                return Err(Error::SubsetInvalid(format!("{a} listed twice")));
            }
            out.push(i);
        }
        Ok(out)
    }

    /// Permutation of boundary indices induced by `x -> x + l/(m+n)`.
    pub fn rotation_action(&self, l: i64) -> Result<Vec<usize>> {
        self.boundary
            .iter()
            .map(|&a| self.index_of(self.ctx.rotate(a, l)).ok_or(Error::NotInvariant(l)))
            .collect()
    }

    pub fn is_rotation_invariant(&self) -> bool {
        self.rotation_action(1).is_ok()
    }

    /// All rotations `l = 0..m+n` as boundary permutations.
    pub fn rotation_group(&self) -> Result<Vec<Vec<usize>>> {
        (0..self.cells() as i64).map(|l| self.rotation_action(l)).collect()
    }

    /// Whether the enlarged boundary coincides with the post-critical set.
    pub fn symmetrization_is_trivial(&self) -> bool {
        (self.ctx.n() as usize).gcd(&self.cells()) == 1
    }

    /// Level 1 as a one-step refinement of the boundary.
    pub fn refinement(&self) -> Refinement {
        let l1 = self.next_level(&self.level0());
        Refinement {
            boundary_len: self.len(),
            vertex_count: l1.num_vertices,
            copies: l1.copies,
            boundary_ids: l1.boundary_ids,
        }
    }

    fn level0(&self) -> GluedVertexSet {
        let b = self.len();
        GluedVertexSet {
            level: 0,
            num_vertices: b,
            copies: Vec::new(),
            inclusion: (0..b).collect(),
            boundary_ids: (0..b).collect(),
            merges: Vec::new(),
        }
    }

    /// Glued vertex set at level `k`.
    pub fn level_vertices(&self, k: usize) -> Result<GluedVertexSet> {
        Ok(self.levels(k)?.pop().expect("level 0 always present"))
    }

    /// Levels `0..=k`.
    pub fn levels(&self, k: usize) -> Result<Vec<GluedVertexSet>> {
        if k > self.depth_cap {
            return Err(Error::DepthCap { requested: k, cap: self.depth_cap });
        }
        let mut out = vec![self.level0()];
        for _ in 0..k {
            let next = self.next_level(out.last().unwrap());
            out.push(next);
        }
        Ok(out)
    }

    fn next_level(&self, prev: &GluedVertexSet) -> GluedVertexSet {
        let cells = self.cells();
        let p = prev.num_vertices;
        let mut uf = UnionFind::new(cells * p);
        let mut junctions = Vec::with_capacity(cells);
        for i in 0..cells {
            let j = (i + 1) % cells;
            let u = prev.boundary_ids[self.glue_index[i]];
            uf.union(i * p + u, j * p + u);
            junctions.push((i, j, u));
        }
        let labels = uf.labels();
        let num_vertices = labels.iter().copied().max().map_or(0, |m| m + 1);
        let copies: Vec<Vec<usize>> =
            (0..cells).map(|i| labels[i * p..(i + 1) * p].to_vec()).collect();

        let inclusion: Vec<usize> = if prev.level == 0 {
            (0..self.len())
                .map(|x| copies[self.cell_of[x] - 1][self.phi_index[x]])
                .collect()
        } else {
            let mut inc = vec![usize::MAX; p];
            for (i, copy) in prev.copies.iter().enumerate() {
                for (v, &id) in copy.iter().enumerate() {
                    let image = copies[i][prev.inclusion[v]];
                    debug_assert!(inc[id] == usize::MAX || inc[id] == image, "inconsistent inclusion");
                    inc[id] = image;
                }
            }
            inc
        };
        let boundary_ids = prev.boundary_ids.iter().map(|&v| inclusion[v]).collect();
        let mut merges = Vec::with_capacity(2 * cells);
        for (i, j, u) in junctions {
            let id = copies[i][u];
            merges.push([i + 1, u, id]);
            merges.push([j + 1, u, id]);
        }
        GluedVertexSet { level: prev.level + 1, num_vertices, copies, inclusion, boundary_ids, merges }
    }

    pub fn to_json(&self) -> StructureJson {
        let cells = self
            .boundary
            .iter()
            .zip(&self.cell_of)
            .map(|(a, &c)| (a.to_string(), c))
            .collect();
        StructureJson {
            ctx: self.ctx.to_json(),
            symmetrized: self.symmetrized,
            boundary: self.labels(),
            glue_points: self.glue_points.iter().map(|a| a.to_string()).collect(),
            cells,
        }
    }

    /// Rebuilds from the context and checks the stored data against it.
    pub fn from_json(json: &StructureJson) -> Result<Self> {
        let ctx = AngleContext::try_from(&json.ctx)?;
        let s = MsStructure::build(ctx, json.symmetrized)?;
        let stored = s.to_json();
        if stored.boundary != json.boundary {
            return Err(Error::Parse("boundary does not match the context".into()));
        }
        if stored.glue_points != json.glue_points {
            return Err(Error::Parse("glue points do not match the context".into()));
        }
        if stored.cells != json.cells {
            return Err(Error::Parse("cell assignment does not match the context".into()));
        }
        Ok(s)
    }
}

impl GluedVertexSet {
    /// Pairs of copies (0-based) sharing at least one vertex.
    pub fn cell_adjacency(&self) -> Vec<(usize, usize)> {
        let mut owners: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (i, copy) in self.copies.iter().enumerate() {
            for &v in copy {
                owners.entry(v).or_default().push(i);
            }
        }
        let mut pairs: Vec<(usize, usize)> = owners
            .values()
            .flat_map(|o| {
                let o = o.clone();
                (0..o.len()).flat_map(move |a| {
                    let o = o.clone();
                    (a + 1..o.len()).map(move |b| (o[a].min(o[b]), o[a].max(o[b])))
                })
            })
            .collect();
        pairs.sort_unstable();
        pairs.dedup();
        pairs
    }

    /// Vertices belonging to more than one copy.
    pub fn junction_vertices(&self) -> Vec<usize> {
        let mut seen = vec![0usize; self.num_vertices];
        for copy in &self.copies {
            let mut c = copy.clone();
            c.sort_unstable();
            c.dedup();
            for v in c {
                seen[v] += 1;
            }
        }
        (0..self.num_vertices).filter(|&v| seen[v] > 1).collect()
    }

    /// Components of the gluing graph (each copy a clique) after removing `removed`.
    pub fn components_without(&self, removed: &[usize]) -> usize {
        let mut uf = UnionFind::new(self.num_vertices);
        let gone = |v: &usize| removed.contains(v);
        for copy in &self.copies {
            let kept: Vec<usize> = copy.iter().copied().filter(|v| !gone(v)).collect();
            for w in kept.windows(2) {
                uf.union(w[0], w[1]);
            }
        }
        let mut roots: Vec<usize> =
            (0..self.num_vertices).filter(|v| !gone(v)).map(|v| uf.find(v)).collect();
        roots.sort_unstable();
        roots.dedup();
        roots.len()
    }

    pub fn to_json(&self) -> LevelJson {
        LevelJson {
            level: self.level,
            num_vertices: self.num_vertices,
            merges: self.merges.clone(),
            inclusion: self.inclusion.iter().enumerate().map(|(a, &b)| [a, b]).collect(),
            boundary_ids: self.boundary_ids.clone(),
        }
    }
}

fn describe_invalid(ctx: &AngleContext, report: &MsValidity) -> String {
    let first = &report.violations[0];
    format!(
        "{ctx}: Phi_n^{}(c_{}) = {} equals c_{}",
        first.step, first.critical, first.angle, first.hits
    )
}

/// Wire format of a structure.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructureJson {
    pub ctx: ContextJson,
    pub symmetrized: bool,
    pub boundary: Vec<String>,
    pub glue_points: Vec<String>,
    pub cells: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelJson {
    pub level: usize,
    pub num_vertices: usize,
    pub merges: Vec<[usize; 3]>,
    pub inclusion: Vec<[usize; 2]>,
    pub boundary_ids: Vec<usize>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::angle::parse_ratio;

    fn ms(n: u64, m: u64, theta: &str, sym: bool) -> MsStructure {
        let ctx = AngleContext::new(n, m, parse_ratio(theta).unwrap()).unwrap();
        MsStructure::build(ctx, sym).unwrap()
    }

    fn strs(v: &[Angle]) -> Vec<String> {
        v.iter().map(|a| a.to_string()).collect()
    }

    #[test]
    fn build_examples() {
        let s = ms(2, 1, "1/12", false);
        assert_eq!(s.len(), 6);
        assert_eq!(strs(s.glue_points()), ["5/6", "1/2", "1/6"]);
        let s = ms(2, 2, "3/16", true);
        assert_eq!(s.len(), 8);
        assert!(s.boundary().iter().all(|a| 8 % a.to_ratio().denom() == 0));
        assert_eq!(ms(2, 1, "1/6", false).len(), 3);
        let bad = AngleContext::new(2, 1, parse_ratio("1/3").unwrap()).unwrap();
        assert!(matches!(MsStructure::build(bad, false), Err(Error::InvalidMs(_))));
    }

    #[test]
    fn level_counts() {
        let s = ms(2, 1, "1/12", false);
        assert_eq!(s.level_vertices(1).unwrap().num_vertices, 15);
        let g = ms(2, 1, "1/6", false);
        assert_eq!(g.level_vertices(1).unwrap().num_vertices, 6);
        assert_eq!(g.level_vertices(2).unwrap().num_vertices, 15);
        let l0 = s.level_vertices(0).unwrap();
        assert_eq!(l0.num_vertices, 6);
        assert_eq!(l0.inclusion, (0..6).collect::<Vec<_>>());
        assert!(matches!(s.level_vertices(13), Err(Error::DepthCap { requested: 13, cap: 12 })));
        let capped = s.clone().with_depth_cap(1);
        assert!(capped.level_vertices(2).is_err());
    }

    #[test]
    fn gasket_level_one_is_the_gasket() {
        let g = ms(2, 1, "1/6", false);
        let r = g.refinement();
        // Every copy is a triangle; boundary ids are distinct corners.
        let mut ids = r.boundary_ids.clone();
        ids.sort_unstable();
        ids.dedup();
        assert_eq!(ids.len(), 3);
        let l1 = g.level_vertices(1).unwrap();
        assert_eq!(l1.cell_adjacency(), [(0, 1), (0, 2), (1, 2)]);
    }

    #[test]
    fn ring_and_cut_points() {
        for (n, m, theta) in [(2, 1, "1/12"), (2, 2, "3/16"), (3, 1, "1/12"), (2, 3, "1/10")] {
            let s = ms(n, m, theta, false);
            let l1 = s.level_vertices(1).unwrap();
            let cells = s.cells();
            let expected: Vec<(usize, usize)> = {
                let mut e: Vec<_> = (0..cells).map(|i| (i.min((i + 1) % cells), i.max((i + 1) % cells))).collect();
                e.sort_unstable();
                e.dedup();
                e
            };
            assert_eq!(l1.cell_adjacency(), expected);
            let junctions = l1.junction_vertices();
            assert_eq!(junctions.len(), cells);
            assert_eq!(l1.components_without(&junctions), cells);
        }
    }

    #[test]
    fn inclusion_is_injective_across_levels() {
        let s = ms(2, 1, "1/12", false);
        let levels = s.levels(3).unwrap();
        for l in &levels[1..] {
            let mut inc = l.inclusion.clone();
            inc.sort_unstable();
            inc.dedup();
            assert_eq!(inc.len(), l.inclusion.len());
            assert!(l.inclusion.iter().all(|&v| v < l.num_vertices));
        }
    }

    #[test]
    fn rotation_examples() {
        let s = ms(2, 1, "1/12", false);
        let rot = s.rotation_action(1).unwrap();
        let labels = s.labels();
        let image: Vec<&str> = rot.iter().map(|&i| labels[i].as_str()).collect();
        assert_eq!(labels, ["0/1", "1/6", "1/3", "1/2", "2/3", "5/6"]);
        assert_eq!(image, ["1/3", "1/2", "2/3", "5/6", "0/1", "1/6"]);
        assert_eq!(s.rotation_action(0).unwrap(), (0..6).collect::<Vec<_>>());
        let u = ms(2, 2, "3/16", false);
        assert!(matches!(u.rotation_action(1), Err(Error::NotInvariant(1))));
    }

    #[test]
    fn rotation_commutes_with_inclusion() {
        for (n, m, theta) in [(2, 1, "1/12"), (2, 2, "3/16"), (3, 1, "1/12"), (2, 3, "1/10")] {
            let s = ms(n, m, theta, true);
            let r = s.refinement();
            let cells = s.cells() as i64;
            for l in 0..cells {
                let g = s.rotation_action(l).unwrap();
                let gn = s.rotation_action((n as i64 * l).rem_euclid(cells)).unwrap();
                // Level-1 permutation: copy i -> copy i+l, apply g_{nl} inside.
                let mut perm = vec![usize::MAX; r.vertex_count];
                for (i, copy) in r.copies.iter().enumerate() {
                    let j = (i + l as usize) % cells as usize;
                    for (v, &id) in copy.iter().enumerate() {
                        perm[id] = r.copies[j][gn[v]];
                    }
                }
                for x in 0..s.len() {
                    assert_eq!(perm[r.boundary_ids[x]], r.boundary_ids[g[x]], "({n},{m},{theta}) l={l}");
                }
            }
        }
    }

    #[test]
    fn symmetrized_equals_plain_when_coprime() {
        for (n, m, theta) in [(2, 1, "1/12"), (3, 1, "1/12"), (2, 3, "1/10"), (3, 2, "2/15")] {
            let plain = ms(n, m, theta, false);
            let sym = ms(n, m, theta, true);
            assert!(plain.symmetrization_is_trivial());
            assert_eq!(plain.boundary(), sym.boundary());
        }
    }

    #[test]
    fn json_round_trip() {
        let s = ms(2, 1, "1/12", false);
        let json = s.to_json();
        let text = serde_json::to_string(&json).unwrap();
        let back: StructureJson = serde_json::from_str(&text).unwrap();
        assert_eq!(MsStructure::from_json(&back).unwrap(), s);
        let mut tampered = back.clone();
        tampered.boundary.pop();
        assert!(MsStructure::from_json(&tampered).is_err());
        let level = s.level_vertices(1).unwrap().to_json();
        assert_eq!(level.num_vertices, 15);
        assert_eq!(level.merges.len(), 6);
    }
}
