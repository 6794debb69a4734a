//! Julia sets with a fixed critical point: the `{p_l, q_l}` vertex model,
//! its level-2 subcell gluing and the graph-directed renormalization.
//!
//! Cells and subcells are 1-based as `l, k` in `1..=m+n`. Every subcell
//! `Psi_{k,l}(K_k)` carries four corner slots, the images of the corners of
//! `K_k` in the order `[p_{k-1}, q_{k-1}, p_k, q_k]`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::ConductanceForm;
use crate::partition::Partition;
use crate::refinement::Refinement;
use crate::relations::{self, RhoOptions, RhoReport, Side};
use crate::renorm::{self, HarmonicStructure, NonConvergence, SolveOptions};
use crate::unionfind::UnionFind;

/// Corner slots of a cell or subcell.
pub const CORNER_NAMES: [&str; 4] = ["p0", "q0", "p1", "q1"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GdStructure {
    n: usize,
    m: usize,
    /// `ids[((l-1)*N + (k-1))*4 + c]`: level-2 vertex of corner `c` of subcell `(k, l)`.
    ids: Vec<usize>,
    num_vertices: usize,
}

impl GdStructure {
    pub fn build(n: u64, m: u64) -> Result<Self> {
        if n < 2 || m < 1 {
            return Err(Error::InvalidContext(format!("need n >= 2 and m >= 1, got n={n}, m={m}")));
        }
        let (n, m) = (n as usize, m as usize);
        let cells = n + m;
        let kk = |x: i64| ((x - 1).rem_euclid(cells as i64) + 1) as usize;
        let slot = |l: usize, k: usize, c: usize| ((l - 1) * cells + (k - 1)) * 4 + c;
        let mut uf = UnionFind::new(cells * cells * 4);
        for l in 1..=cells {
            let li = l as i64;
            let (nl, nl_prev) = (kk(n as i64 * li), kk(n as i64 * (li - 1)));
            for k in 1..=cells {
                let next = k % cells + 1;
                uf.union(slot(l, k, 3), slot(l, next, 1));
                if k != nl && k != nl_prev {
                    uf.union(slot(l, k, 2), slot(l, next, 0));
                }
            }
            let l_next = l % cells + 1;
            let after = kk(n as i64 * li + 1);
            uf.union(slot(l, nl, 2), slot(l_next, after, 0));
            uf.union(slot(l, after, 0), slot(l_next, nl, 2));
        }
        let ids = uf.labels();
        let num_vertices = ids.iter().copied().max().map_or(0, |v| v + 1);
        let s = GdStructure { n, m, ids, num_vertices };
        if num_vertices != 2 * cells * cells {
            return Err(Error::Internal(format!("gluing produced {num_vertices} vertices, expected {}", 2 * cells * cells)));
        }
        Ok(s)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn cells(&self) -> usize {
        self.n + self.m
    }

    pub fn num_vertices(&self) -> usize {
        self.num_vertices
    }

    fn kk(&self, x: i64) -> usize {
        ((x - 1).rem_euclid(self.cells() as i64) + 1) as usize
    }

    /// Level-2 vertex of corner `c` of subcell `Psi_{k,l}(K_k)`.
    pub fn vertex(&self, k: usize, l: usize, c: usize) -> usize {
        let n = self.cells();
        self.ids[((l - 1) * n + (k - 1)) * 4 + c]
    }

    /// Level-2 vertices of the corners `[p_{l-1}, q_{l-1}, p_l, q_l]` of cell `l`.
    pub fn cell_corners(&self, l: usize) -> [usize; 4] {
        let (n, l64) = (self.n as i64, l as i64);
        [
            self.vertex(self.kk(n * (l64 - 1) + 1), l, 0),
            self.vertex(self.kk(n * (l64 - 1)), l, 2),
            self.vertex(self.kk(n * l64), l, 2),
            self.vertex(self.kk(n * l64 + 1), l, 0),
        ]
    }

    /// Whether subcell `k` of cell `l` lies on the outer arc.
    pub fn is_outer(&self, k: usize, l: usize) -> bool {
        let lo = self.n * (l - 1) + 1;
        (0..self.n).any(|i| self.kk((lo + i) as i64) == k)
    }

    /// Vertices of cell `l`, sorted.
    pub fn cell_vertices(&self, l: usize) -> Vec<usize> {
        let mut v: Vec<usize> =
            (1..=self.cells()).flat_map(|k| (0..4).map(move |c| (k, c))).map(|(k, c)| self.vertex(k, l, c)).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// Pairs of consecutive subcells of cell `l` sharing a vertex, with the shared count.
    pub fn subcell_adjacency(&self, l: usize) -> Vec<(usize, usize, usize)> {
        let n = self.cells();
        let mut out = Vec::new();
        for a in 1..=n {
            for b in a + 1..=n {
                let va: Vec<usize> = (0..4).map(|c| self.vertex(a, l, c)).collect();
                let shared = (0..4).filter(|&c| va.contains(&self.vertex(b, l, c))).count();
                if shared > 0 {
                    out.push((a, b, shared));
                }
            }
        }
        out
    }

    /// Refinement of cell `l` into its subcells, in cell-local vertex ids.
    ///
    /// `copies[k-1]` places the corners of `K_k` on subcell `k`; the boundary
    /// is the corner list of cell `l`.
    pub fn cell_refinement(&self, l: usize) -> Refinement {
        let verts = self.cell_vertices(l);
        let local = |v: usize| verts.binary_search(&v).expect("vertex of the cell");
        Refinement {
            boundary_len: 4,
            vertex_count: verts.len(),
            copies: (1..=self.cells()).map(|k| (0..4).map(|c| local(self.vertex(k, l, c))).collect()).collect(),
            boundary_ids: self.cell_corners(l).iter().map(|&v| local(v)).collect(),
        }
    }

    /// The rotation-reduced refinement: every subcell of cell 1 carries the same form.
    pub fn reduced_refinement(&self) -> Refinement {
        self.cell_refinement(1)
    }

    pub fn existence(&self) -> Existence {
        existence(self.n as u64, self.m as u64)
    }

    pub fn to_json(&self) -> GdJson {
        let n = self.cells();
        let mut corner_maps = Vec::with_capacity(4 * n * n);
        for l in 1..=n {
            for k in 1..=n {
                for c in 0..4 {
                    corner_maps.push([k, l, c, self.vertex(k, l, c)]);
                }
            }
        }
        GdJson {
            kind: "graph_directed".into(),
            n: self.n,
            m: self.m,
            num_vertices: self.num_vertices,
            corner_order: CORNER_NAMES.iter().map(|s| s.to_string()).collect(),
            cell_corners: (1..=n).map(|l| self.cell_corners(l)).collect(),
            corner_maps,
        }
    }

    /// Rebuilds from `n, m` and checks the stored tables.
    pub fn from_json(json: &GdJson) -> Result<Self> {
        if json.kind != "graph_directed" {
            return Err(Error::Parse(format!("expected kind graph_directed, got {:?}", json.kind)));
        }
        let s = GdStructure::build(json.n as u64, json.m as u64)?;
        if s.to_json() != *json {
            return Err(Error::Parse("corner tables do not match the gluing model".into()));
        }
        Ok(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GdJson {
    pub kind: String,
    pub n: usize,
    pub m: usize,
    pub num_vertices: usize,
    pub corner_order: Vec<String>,
    /// Per cell `l = 1..`: vertices of `[p_{l-1}, q_{l-1}, p_l, q_l]`.
    pub cell_corners: Vec<[usize; 4]>,
    /// Rows `[k, l, corner, level2_id]`.
    pub corner_maps: Vec<[usize; 4]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Existence {
    Exists,
    DoesNotExist,
    /// `1/m + 1/n = 1/2`; the criteria do not decide.
    Inconclusive,
}

/// Verdict from the sign of `1/m + 1/n - 1/2`.
pub fn existence(n: u64, m: u64) -> Existence {
    let (lhs, rhs) = (2 * (m + n), m * n);
    match lhs.cmp(&rhs) {
        std::cmp::Ordering::Greater => Existence::Exists,
        std::cmp::Ordering::Less => Existence::DoesNotExist,
        std::cmp::Ordering::Equal => Existence::Inconclusive,
    }
}

pub fn gd_renorm_t(s: &GdStructure, form: &ConductanceForm) -> Result<ConductanceForm> {
    s.reduced_refinement().renormalize(form)
}

/// One step of the unreduced system: cell `l` receives form `forms[k-1]` on subcell `k`.
pub fn gd_renorm_system(s: &GdStructure, forms: &[ConductanceForm]) -> Result<Vec<ConductanceForm>> {
    let n = s.cells();
    if forms.len() != n {
        return Err(Error::VertexMismatch { expected: n, got: forms.len() });
    }
    (1..=n)
        .map(|l| {
            let r = s.cell_refinement(l);
            let mut net = ConductanceForm::zero(r.vertex_count);
            for (copy, form) in r.copies.iter().zip(forms) {
                if form.len() != 4 {
                    return Err(Error::VertexMismatch { expected: 4, got: form.len() });
                }
                for (x, y, w) in form.edges() {
                    net.add_weight(copy[x], copy[y], w);
                }
            }
            net.trace(&r.boundary_ids)
        })
        .collect()
}

/// Iterates the unreduced system from `init`, normalizing total mass; returns
/// the final forms and the largest relative deviation between cells.
pub fn gd_iterate_system(
    s: &GdStructure,
    init: Vec<ConductanceForm>,
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<ConductanceForm>, f64, usize)> {
    let normalize = |forms: Vec<ConductanceForm>| -> Result<Vec<ConductanceForm>> {
        let mass: f64 = forms.iter().map(|f| f.mass()).sum();
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::DegenerateQuotient("system iterate vanished".into()));
        }
        Ok(forms.into_iter().map(|f| f.scaled(1.0 / mass)).collect())
    };
    let mut forms = normalize(init)?;
    for it in 1..=max_iter {
        let next = normalize(gd_renorm_system(s, &forms)?)?;
        let scale = next.iter().map(|f| f.max_weight()).fold(0.0, f64::max);
        let change = next.iter().zip(&forms).map(|(a, b)| a.max_abs_diff(b)).fold(0.0, f64::max) / scale;
        forms = next;
        if change < tol {
            let spread = forms.iter().map(|f| f.max_abs_diff(&forms[0])).fold(0.0, f64::max) / scale;
            return Ok((forms, spread, it));
        }
    }
    Err(Error::from(NonConvergence {
        reason: "unreduced system did not settle".into(),
        iterations: max_iter,
        last_change: f64::NAN,
        period: None,
        last_eta: f64::NAN,
        last_iterates: forms.iter().map(|f| f.pair_weights()).collect(),
    }))
}

/// Result of [`gd_solve`]: the pre-verdict plus the iteration outcome.
#[derive(Debug, Clone)]
pub struct GdOutcome {
    pub existence: Existence,
    pub solution: std::result::Result<HarmonicStructure, NonConvergence>,
}

pub fn gd_solve(s: &GdStructure, opts: &SolveOptions) -> Result<GdOutcome> {
    let existence = s.existence();
    let solution = match renorm::solve_fixed_point(&s.reduced_refinement(), None, opts) {
        Ok(hs) => Ok(hs),
        Err(Error::NonConvergence(diag)) => Err(*diag),
        Err(e) => return Err(e),
    };
    if existence == Existence::DoesNotExist {
        if let Ok(hs) = &solution {
            log::warn!("iteration settled (eta {}) although no invariant form exists", hs.eta);
        }
    }
    Ok(GdOutcome { existence, solution })
}

/// `(eta, 1/eta)` in closed form for `m = 1`.
pub fn gd_eta_m1(n: u64) -> f64 {
    (2 * n + 1) as f64 / (n + 1) as f64
}

pub fn j1() -> Partition {
    Partition::from_labels(&[0, 0, 1, 1])
}

pub fn j2() -> Partition {
    Partition::from_labels(&[0, 1, 0, 1])
}

#[derive(Debug, Clone, PartialEq)]
pub struct GdRhoTable {
    pub j1_relation: RhoReport,
    pub j1_quotient: RhoReport,
    pub j2_relation: RhoReport,
    pub j2_quotient: RhoReport,
}

impl GdRhoTable {
    /// `[rho_bar J1, rho_under V/J1, rho_bar J2, rho_under V/J2]` as found by the search.
    pub fn values(&self) -> [f64; 4] {
        [self.j1_relation.rho_over, self.j1_quotient.rho_under, self.j2_relation.rho_over, self.j2_quotient.rho_under]
    }
}

/// Closed-form values of the table, in the order of [`GdRhoTable::values`].
pub fn gd_rho_closed_form(n: u64, m: u64) -> [f64; 4] {
    let (n, m) = (n as f64, m as f64);
    [0.5, 1.0 / m + 1.0 / n, 1.0 / n, m * n / (m + n)]
}

pub fn gd_relation_rhos(s: &GdStructure, opts: &RhoOptions) -> Result<GdRhoTable> {
    let r = s.reduced_refinement();
    let (a, b) = (j1(), j2());
    Ok(GdRhoTable {
        j1_relation: relations::rho_search(&r, &a, Side::Relation, opts)?,
        j1_quotient: relations::rho_search(&r, &a, Side::Quotient, opts)?,
        j2_relation: relations::rho_search(&r, &b, Side::Relation, opts)?,
        j2_quotient: relations::rho_search(&r, &b, Side::Quotient, opts)?,
    })
}

/// All relations on the four corners preserved by the reduced refinement.
pub fn gd_preserved_relations(s: &GdStructure) -> Result<Vec<Partition>> {
    relations::enumerate_on(&s.reduced_refinement(), None, relations::DEFAULT_CAP, 1)
}
