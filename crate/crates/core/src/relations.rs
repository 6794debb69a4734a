//! Preserved relations and the quantities entering the existence and
//! uniqueness criteria for eigenforms.
//!
//! Generic operations work on a [`Refinement`]; the MS-specific ones take an
//! [`MsStructure`].

use std::collections::BTreeSet;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::ConductanceForm;
use crate::partition::{Partition, RelationJson, RestrictedGrowth};
use crate::refinement::Refinement;
use crate::renorm::HarmonicStructure;
use crate::structure::MsStructure;
use crate::unionfind::UnionFind;

pub const DEFAULT_CAP: usize = 12;
pub const DEFAULT_K_MAX: usize = 8;
pub const DEFAULT_MARGIN: f64 = 1e-6;

// ---------------------------------------------------------------------------
// closures and preservation

pub fn j1_closure(s: &MsStructure, j: &Partition) -> Result<Partition> {
    s.refinement().closure(j)
}

pub fn is_preserved(s: &MsStructure, j: &Partition, require_g: bool) -> Result<bool> {
    if j.len() != s.len() {
        return Err(Error::GroundSetMismatch(format!("relation on {} points, boundary has {}", j.len(), s.len())));
    }
    if require_g {
        let group = s.rotation_group()?;
        if !group.iter().all(|g| j.is_invariant(g)) {
            return Ok(false);
        }
    }
    s.refinement().is_preserved(j)
}

/// Closures `J^(1), ..., J^(k)` on the level sets, merging block images under
/// every word map of length `l`.
pub fn closures_up_to(s: &MsStructure, j: &Partition, k: usize) -> Result<Vec<Partition>> {
    if j.len() != s.len() {
        return Err(Error::GroundSetMismatch(format!("relation on {} points, boundary has {}", j.len(), s.len())));
    }
    let levels = s.levels(k)?;
    let mut words: Vec<Vec<usize>> = vec![(0..s.len()).collect()];
    let mut out = Vec::with_capacity(k);
    for level in &levels[1..] {
        words = level
            .copies
            .iter()
            .flat_map(|copy| words.iter().map(move |w| w.iter().map(|&v| copy[v]).collect()))
            .collect();
        let mut uf = UnionFind::new(level.num_vertices);
        for w in &words {
            for block in j.blocks() {
                for pair in block.windows(2) {
                    uf.union(w[pair[0]], w[pair[1]]);
                }
            }
        }
        out.push(Partition::from_labels(&uf.labels()));
    }
    Ok(out)
}

/// All relations preserved by `r` (and invariant under `group`, if given),
/// in restricted-growth order.
pub fn enumerate_on(
    r: &Refinement,
    group: Option<&[Vec<usize>]>,
    cap: usize,
    threads: usize,
) -> Result<Vec<Partition>> {
    let b = r.boundary_len;
    if b > cap {
        return Err(Error::CapExceeded { size: b, cap });
    }
    let threads = threads.max(1);
    let invariant = |labels: &[usize]| {
        group.is_none_or(|gs| {
            gs.iter().all(|g| {
                (0..b).all(|x| (x + 1..b).all(|y| (labels[x] == labels[y]) == (labels[g[x]] == labels[g[y]])))
            })
        })
    };
    let mut found: Vec<(usize, Partition)> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..threads)
            .map(|w| {
                let invariant = &invariant;
                scope.spawn(move || {
                    let mut uf = UnionFind::new(r.vertex_count);
                    let mut hits = Vec::new();
                    for (idx, labels) in RestrictedGrowth::new(b).enumerate() {
                        if idx % threads != w {
                            continue;
                        }
                        if invariant(&labels) && r.preserves_labels(&mut uf, &labels) {
                            hits.push((idx, Partition::from_labels(&labels)));
                        }
                    }
                    hits
                })
            })
            .collect();
        handles.into_iter().flat_map(|h| h.join().expect("enumeration worker panicked")).collect()
    });
    found.sort_by_key(|(idx, _)| *idx);
    Ok(found.into_iter().map(|(_, p)| p).collect())
}

pub fn enumerate_preserved(s: &MsStructure, require_g: bool, cap: usize, threads: usize) -> Result<Vec<Partition>> {
    let group = if require_g { Some(s.rotation_group()?) } else { None };
    enumerate_on(&s.refinement(), group.as_deref(), cap, threads)
}

/// Pairs `J <= J'` (indices into `relations`) of distinct nontrivial relations.
pub fn strictly_ordered_pairs(relations: &[Partition]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for (a, ja) in relations.iter().enumerate() {
        for (b, jb) in relations.iter().enumerate() {
            if a != b && !ja.is_trivial() && !jb.is_trivial() && ja != jb && ja.refines(jb) {
                out.push((a, b));
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JPlusMinus {
    pub plus: Partition,
    pub minus: Partition,
}

/// The two candidate relations built from `kappa`.
pub fn build_j_plus_minus(s: &MsStructure) -> Result<JPlusMinus> {
    let kappa = s.ctx().kappa().map_err(|e| Error::KappaUndefined(e.to_string()))?;
    let cells = s.cells();
    let glue = s.glue_index();
    let phi = s.phi_index();
    // First images: Phi(c_i) = r_i and Phi(r_kappa(i)).
    let seed = |offset: usize| -> Vec<(usize, usize)> {
        (0..cells)
            .map(|i| {
                let c = glue[(i + cells - offset) % cells];
                let r = phi[glue[kappa[i] - 1]];
                (c, r)
            })
            .collect()
    };
    let close = |edges: Vec<(usize, usize)>| {
        let mut all: BTreeSet<(usize, usize)> = BTreeSet::new();
        let mut frontier = edges;
        while !frontier.is_empty() {
            let mut next = Vec::new();
            for (a, b) in frontier {
                if a == b {
                    continue;
                }
                if all.insert((a.min(b), a.max(b))) {
                    next.push((phi[a], phi[b]));
                }
            }
            frontier = next;
        }
        let mut uf = UnionFind::new(s.len());
        for (a, b) in all {
            uf.union(a, b);
        }
        Partition::from_labels(&uf.labels())
    };
    Ok(JPlusMinus { plus: close(seed(0)), minus: close(seed(1)) })
}

// ---------------------------------------------------------------------------
// operators on degenerate and quotient forms

fn check_in_mj(j: &Partition, d: &ConductanceForm) -> Result<()> {
    if d.len() != j.len() {
        return Err(Error::VertexMismatch { expected: j.len(), got: d.len() });
    }
    let comps = d.support_components();
    if comps.as_slice() != j.blocks() {
        return Err(Error::NotInMJ(format!("support components {comps:?} differ from the blocks {j}")));
    }
    Ok(())
}

/// `T_J` on a form whose kernel is exactly the block-constant functions.
pub fn t_relation(r: &Refinement, j: &Partition, d: &ConductanceForm) -> Result<ConductanceForm> {
    if d.mass() == 0.0 {
        return Ok(ConductanceForm::zero(d.len()));
    }
    check_in_mj(j, d)?;
    r.renormalize(d)
}

/// Block of the level-1 closure containing the image of every block of `j`.
fn boundary_closure_blocks(r: &Refinement, j: &Partition, closure: &Partition) -> Result<Vec<usize>> {
    let labels = closure.labels();
    let mut out = Vec::with_capacity(j.num_blocks());
    for block in j.blocks() {
        let target = labels[r.boundary_ids[block[0]]];
        if block.iter().any(|&x| labels[r.boundary_ids[x]] != target) || out.contains(&target) {
            return Err(Error::NotPreserved(j.to_string()));
        }
        out.push(target);
    }
    Ok(out)
}

/// `T_{V/J}` on a form over the blocks of `j` (indexed in block order).
pub fn t_quotient(r: &Refinement, j: &Partition, dq: &ConductanceForm) -> Result<ConductanceForm> {
    if dq.len() != j.num_blocks() {
        return Err(Error::VertexMismatch { expected: j.num_blocks(), got: dq.len() });
    }
    if dq.len() < 2 {
        return Err(Error::DegenerateQuotient("quotient has a single block".into()));
    }
    if !dq.is_nondegenerate() {
        return Err(Error::DegenerateQuotient("form on the blocks is not connected".into()));
    }
    let closure = r.closure(j)?;
    let targets = boundary_closure_blocks(r, j, &closure)?;
    let labels = closure.labels();
    let mut net = ConductanceForm::zero(closure.num_blocks());
    for copy in &r.copies {
        for (a, b, w) in dq.edges() {
            let u = labels[copy[j.blocks()[a][0]]];
            let v = labels[copy[j.blocks()[b][0]]];
            net.add_weight(u, v, w);
        }
    }
    net.trace(&targets)
}

/// Collapse of `d` onto the blocks: `D_{V/J}(f) = D(f)` for block-constant `f`.
pub fn quotient_form(d: &ConductanceForm, j: &Partition) -> ConductanceForm {
    let labels = j.labels();
    let mut out = ConductanceForm::zero(j.num_blocks());
    for (x, y, w) in d.edges() {
        out.add_weight(labels[x], labels[y], w);
    }
    out
}

/// `D_J`: sum over blocks of the reduction of `d` to that block.
pub fn d_sub_j(d: &ConductanceForm, j: &Partition) -> Result<ConductanceForm> {
    if j.is_trivial() {
        return Err(Error::TrivialRelation);
    }
    if d.len() != j.len() {
        return Err(Error::VertexMismatch { expected: j.len(), got: d.len() });
    }
    let mut out = ConductanceForm::zero(d.len());
    for block in j.blocks().iter().filter(|b| b.len() > 1) {
        let t = d.trace(block)?;
        for (a, b, w) in t.edges() {
            out.add_weight(block[a], block[b], w);
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// stationary ratios

/// Subspace on which both forms of a ratio vanish.
#[derive(Debug, Clone, Copy)]
pub enum Kernel<'a> {
    Constants,
    BlockConstant(&'a Partition),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ratios {
    pub min: f64,
    pub max: f64,
}

fn complement_basis(n: usize, kernel: Kernel<'_>) -> Result<DMatrix<f64>> {
    let mut cols: Vec<(usize, usize)> = Vec::new();
    match kernel {
        Kernel::Constants => cols.extend((1..n).map(|x| (x, 0))),
        Kernel::BlockConstant(j) => {
            if j.len() != n {
                return Err(Error::VertexMismatch { expected: n, got: j.len() });
            }
            for block in j.blocks() {
                cols.extend(block[1..].iter().map(|&x| (x, block[0])));
            }
        }
    }
    let mut q = DMatrix::zeros(n, cols.len());
    for (c, &(plus, minus)) in cols.iter().enumerate() {
        q[(plus, c)] = 1.0;
        q[(minus, c)] = -1.0;
    }
    Ok(q)
}

/// Extreme values of `A(f)/B(f)` over a complement of `kernel`.
pub fn stationary_ratios(a: &ConductanceForm, b: &ConductanceForm, kernel: Kernel<'_>) -> Result<Ratios> {
    if a.len() != b.len() {
        return Err(Error::VertexMismatch { expected: b.len(), got: a.len() });
    }
    let q = complement_basis(b.len(), kernel)?;
    if q.ncols() == 0 {
        return Err(Error::DegeneratePencil);
    }
    let qt = q.transpose();
    let ap = &qt * a.laplacian() * &q;
    let bp = &qt * b.laplacian() * &q;
    let chol = bp.clone().cholesky().ok_or(Error::DegeneratePencil)?;
    let l = chol.l();
    let diag: Vec<f64> = l.diagonal().iter().map(|v| v * v).collect();
    let dmax = diag.iter().fold(0.0_f64, |m, &v| m.max(v));
    let dmin = diag.iter().fold(f64::INFINITY, |m, &v| m.min(v));
    if dmin.is_nan() || dmin <= 1e-13 * dmax {
        return Err(Error::DegeneratePencil);
    }
    let x = l.solve_lower_triangular(&ap).ok_or(Error::DegeneratePencil)?;
    let c = l.solve_lower_triangular(&x.transpose()).ok_or(Error::DegeneratePencil)?;
    let c = (&c + c.transpose()) * 0.5;
    let eig = c.symmetric_eigen();
    let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    let max = eig.eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(Ratios { min, max })
}

// ---------------------------------------------------------------------------
// rho search

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Relation,
    Quotient,
}

#[derive(Debug, Clone)]
pub struct RhoOptions {
    pub restarts: usize,
    pub seed: u64,
    pub init: Option<ConductanceForm>,
    /// Boundary permutations; when set, only invariant forms are searched.
    pub group: Option<Vec<Vec<usize>>>,
    pub min_step: f64,
    pub max_evals: usize,
}

impl Default for RhoOptions {
    fn default() -> Self {
        RhoOptions { restarts: 3, seed: 0, init: None, group: None, min_step: 1e-8, max_evals: 4000 }
    }
}

/// One-sided certificates from a direct search over forms.
///
/// `rho_over` is the smallest largest-ratio found (an upper bound for the
/// infimum over forms), `rho_under` the largest smallest-ratio found (a lower
/// bound for the supremum). Both bracket the true values:
/// `rho_under <= sup min <= inf max <= rho_over`.
#[derive(Debug, Clone, PartialEq)]
pub struct RhoReport {
    pub relation: Partition,
    pub side: Side,
    pub rho_over: f64,
    pub rho_under: f64,
    pub k: usize,
    pub basis_dim: usize,
    pub form_over: ConductanceForm,
    pub form_under: ConductanceForm,
    pub evaluations: usize,
}

struct SearchSpace<'a> {
    r: &'a Refinement,
    j: &'a Partition,
    side: Side,
    size: usize,
    pairs: Vec<(usize, usize)>,
    orbit_of: Vec<usize>,
    orbits: usize,
}

impl<'a> SearchSpace<'a> {
    fn new(r: &'a Refinement, j: &'a Partition, side: Side, group: Option<&[Vec<usize>]>) -> Result<Self> {
        let labels = j.labels();
        let (size, pairs): (usize, Vec<(usize, usize)>) = match side {
            Side::Relation => {
                let pairs = (0..j.len())
                    .flat_map(|x| (x + 1..j.len()).map(move |y| (x, y)))
                    .filter(|&(x, y)| labels[x] == labels[y])
                    .collect();
                (j.len(), pairs)
            }
            Side::Quotient => {
                let nb = j.num_blocks();
                (nb, (0..nb).flat_map(|a| (a + 1..nb).map(move |b| (a, b))).collect())
            }
        };
        let perms: Vec<Vec<usize>> = match (group, side) {
            (None, _) => Vec::new(),
            (Some(gs), Side::Relation) => gs.to_vec(),
            (Some(gs), Side::Quotient) => gs
                .iter()
                .map(|g| j.blocks().iter().map(|b| labels[g[b[0]]]).collect())
                .collect(),
        };
        for g in group.unwrap_or(&[]) {
            if !j.is_invariant(g) {
                return Err(Error::NotPreserved(format!("{j} is not invariant under the group")));
            }
        }
        let index = |x: usize, y: usize| pairs.iter().position(|&p| p == (x.min(y), x.max(y)));
        let mut uf = UnionFind::new(pairs.len());
        for (p, &(x, y)) in pairs.iter().enumerate() {
            for g in &perms {
                if let Some(q) = index(g[x], g[y]) {
                    uf.union(p, q);
                }
            }
        }
        let orbit_of = uf.labels();
        let orbits = orbit_of.iter().copied().max().map_or(0, |m| m + 1);
        Ok(SearchSpace { r, j, side, size, pairs, orbit_of, orbits })
    }

    fn form(&self, params: &[f64]) -> ConductanceForm {
        let mut d = ConductanceForm::zero(self.size);
        for (p, &(x, y)) in self.pairs.iter().enumerate() {
            d.set_weight(x, y, params[self.orbit_of[p]].exp());
        }
        d
    }

    fn params_of(&self, form: &ConductanceForm) -> Vec<f64> {
        let mut sum = vec![0.0; self.orbits];
        let mut count = vec![0usize; self.orbits];
        for (p, &(x, y)) in self.pairs.iter().enumerate() {
            sum[self.orbit_of[p]] += form.weight(x, y).max(1e-300).ln();
            count[self.orbit_of[p]] += 1;
        }
        sum.iter().zip(&count).map(|(s, &c)| s / c as f64).collect()
    }

    fn ratios(&self, d: &ConductanceForm) -> Option<Ratios> {
        let result = match self.side {
            Side::Relation => self
                .r
                .renormalize(d)
                .and_then(|t| stationary_ratios(&t, d, Kernel::BlockConstant(self.j))),
            Side::Quotient => {
                t_quotient(self.r, self.j, d).and_then(|t| stationary_ratios(&t, d, Kernel::Constants))
            }
        };
        result.ok().filter(|r| r.min.is_finite() && r.max.is_finite())
    }

    fn basis_dim(&self) -> usize {
        match self.side {
            Side::Relation => self.j.len() - self.j.num_blocks(),
            Side::Quotient => self.j.num_blocks() - 1,
        }
    }
}

struct Tracker {
    best_over: (f64, Vec<f64>),
    best_under: (f64, Vec<f64>),
    evals: usize,
}

impl Tracker {
    fn record(&mut self, params: &[f64], r: Ratios) {
        self.evals += 1;
        if r.max < self.best_over.0 {
            self.best_over = (r.max, params.to_vec());
        }
        if r.min > self.best_under.0 {
            self.best_under = (r.min, params.to_vec());
        }
    }
}

/// Coordinate pattern search minimizing `objective`; every evaluation is recorded.
fn pattern_search(
    space: &SearchSpace<'_>,
    start: Vec<f64>,
    objective: impl Fn(Ratios) -> f64,
    opts: &RhoOptions,
    tracker: &mut Tracker,
) {
    let eval = |p: &[f64], tracker: &mut Tracker| -> f64 {
        match space.ratios(&space.form(p)) {
            Some(r) => {
                tracker.record(p, r);
                objective(r)
            }
            None => f64::INFINITY,
        }
    };
    let mut x = start;
    let mut fx = eval(&x, tracker);
    let mut step = 1.0;
    let budget = tracker.evals + opts.max_evals;
    while step >= opts.min_step && tracker.evals < budget {
        let mut improved = false;
        for i in 0..x.len() {
            for dir in [1.0, -1.0] {
                let mut y = x.clone();
                y[i] += dir * step;
                let fy = eval(&y, tracker);
                if fy < fx {
                    x = y;
                    fx = fy;
                    improved = true;
                    break;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
}

pub fn rho_search(r: &Refinement, j: &Partition, side: Side, opts: &RhoOptions) -> Result<RhoReport> {
    if j.is_trivial() {
        return Err(Error::TrivialRelation);
    }
    if j.len() != r.boundary_len {
        return Err(Error::GroundSetMismatch(format!("relation on {} points, boundary has {}", j.len(), r.boundary_len)));
    }
    if !r.is_preserved(j)? {
        return Err(Error::NotPreserved(j.to_string()));
    }
    let space = SearchSpace::new(r, j, side, opts.group.as_deref())?;
    let mut starts = vec![vec![0.0; space.orbits]];
    if let Some(init) = &opts.init {
        if init.len() != space.size {
            return Err(Error::VertexMismatch { expected: space.size, got: init.len() });
        }
        starts.push(space.params_of(init));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    for _ in 0..opts.restarts {
        starts.push((0..space.orbits).map(|_| rng.gen_range(-2.0..2.0)).collect());
    }
    let mut tracker = Tracker {
        best_over: (f64::INFINITY, Vec::new()),
        best_under: (f64::NEG_INFINITY, Vec::new()),
        evals: 0,
    };
    for start in starts {
        pattern_search(&space, start.clone(), |r| r.max, opts, &mut tracker);
        pattern_search(&space, start, |r| -r.min, opts, &mut tracker);
    }
    if tracker.best_over.1.is_empty() || tracker.best_under.1.is_empty() {
        return Err(Error::DegeneratePencil);
    }
    Ok(RhoReport {
        relation: j.clone(),
        side,
        rho_over: tracker.best_over.0,
        rho_under: tracker.best_under.0,
        k: 1,
        basis_dim: space.basis_dim(),
        form_over: space.form(&tracker.best_over.1),
        form_under: space.form(&tracker.best_under.1),
        evaluations: tracker.evals,
    })
}

/// The forms used to bound both sides for `m = 1`: a star inside every block
/// centred at the glue image `r_kappa(i)`, and the cycle
/// `sum_i (f(I_{i+1}) - f(I_i))^2` on the blocks.
pub fn kappa_witness_forms(s: &MsStructure, j: &Partition) -> Result<(ConductanceForm, ConductanceForm)> {
    let kappa = s.ctx().kappa().map_err(|e| Error::KappaUndefined(e.to_string()))?;
    let labels = j.labels();
    let centres: Vec<usize> = kappa.iter().map(|&k| s.glue_index()[k - 1]).collect();
    let order: Vec<usize> = centres.iter().map(|&x| labels[x]).collect();
    let distinct: BTreeSet<usize> = order.iter().copied().collect();
    if distinct.len() != order.len() || order.len() != j.num_blocks() {
        return Err(Error::NotPreserved(format!("{j} does not have one block per glue image")));
    }
    let mut star = ConductanceForm::zero(j.len());
    for &c in &centres {
        for &x in &j.blocks()[labels[c]] {
            if x != c {
                star.set_weight(x, c, 1.0);
            }
        }
    }
    let nb = order.len();
    let mut cycle = ConductanceForm::zero(nb);
    for i in 0..nb {
        cycle.add_weight(order[i], order[(i + 1) % nb], 1.0);
    }
    Ok((star, cycle))
}

// ---------------------------------------------------------------------------
// verdicts and certificates

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    NoNontrivialRelationsExistsUnique,
    CriteriaHoldExistsUnique,
    NonexistenceCertified,
    Inconclusive,
}

/// Certificates for one nontrivial relation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub relation: RelationJson,
    /// Upper certificate for the relation-side infimum of the largest ratio.
    pub rho_over: f64,
    /// Lower certificate for the quotient-side supremum of the smallest ratio.
    pub rho_under: f64,
    /// Lower certificate for the relation-side supremum of the smallest ratio.
    pub relation_rho_under: f64,
    /// Upper bound for the quotient-side supremum of the smallest ratio.
    pub quotient_rho_over: f64,
    pub k: usize,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictReport {
    pub verdict: Verdict,
    pub nontrivial: usize,
    pub witnesses: Vec<Witness>,
    /// Index pairs `(a, b)` into the witnesses with relation `a` strictly finer than `b`.
    pub ordered_pairs: Vec<(usize, usize)>,
    /// `(a, b)` with the quotient bound of `a` below the relation bound of `b`.
    pub nonexistence_pair: Option<(usize, usize)>,
}

pub fn criteria_verdict(
    r: &Refinement,
    names: &[String],
    solution_found: bool,
    relations: &[Partition],
    opts: &RhoOptions,
) -> Result<VerdictReport> {
    let nontrivial: Vec<Partition> = relations.iter().filter(|j| !j.is_trivial()).cloned().collect();
    if nontrivial.is_empty() {
        return Ok(VerdictReport {
            verdict: Verdict::NoNontrivialRelationsExistsUnique,
            nontrivial: 0,
            witnesses: Vec::new(),
            ordered_pairs: Vec::new(),
            nonexistence_pair: None,
        });
    }
    let mut witnesses = Vec::with_capacity(nontrivial.len());
    for j in &nontrivial {
        let rel = rho_search(r, j, Side::Relation, opts)?;
        let quo = rho_search(r, j, Side::Quotient, opts)?;
        witnesses.push(Witness {
            relation: j.to_json(names),
            rho_over: rel.rho_over,
            rho_under: quo.rho_under,
            relation_rho_under: rel.rho_under,
            quotient_rho_over: quo.rho_over,
            k: 1,
            holds: rel.rho_over < quo.rho_under,
        });
    }
    let ordered_pairs = strictly_ordered_pairs(&nontrivial);
    let mut nonexistence_pair = None;
    'outer: for (a, wa) in witnesses.iter().enumerate() {
        for (b, wb) in witnesses.iter().enumerate() {
            if wa.quotient_rho_over < wb.relation_rho_under {
                nonexistence_pair = Some((a, b));
                break 'outer;
            }
        }
    }
    let verdict = if nonexistence_pair.is_some() {
        Verdict::NonexistenceCertified
    } else if witnesses.iter().all(|w| w.holds) && (ordered_pairs.is_empty() || solution_found) {
        Verdict::CriteriaHoldExistsUnique
    } else {
        Verdict::Inconclusive
    };
    Ok(VerdictReport { verdict, nontrivial: nontrivial.len(), witnesses, ordered_pairs, nonexistence_pair })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniquenessReport {
    pub certified: bool,
    /// First `k` with `eta^k * maxratio(T_J^k D_J, D_J) < 1 - margin`.
    pub k: Option<usize>,
    pub margin: f64,
    /// `eta^k * maxratio(T_J^k D_J, D_J)` for `k = 1..=k_max`.
    pub trajectory: Vec<f64>,
    /// Whether the trajectory never increases (beyond rounding).
    pub monotone: bool,
}

pub fn uniqueness_certificate(
    r: &Refinement,
    hs: &HarmonicStructure,
    j: &Partition,
    k_max: usize,
    margin: f64,
) -> Result<UniquenessReport> {
    let dj = d_sub_j(&hs.form, j)?;
    if !r.is_preserved(j)? {
        return Err(Error::NotPreserved(j.to_string()));
    }
    let mut current = t_relation(r, j, &dj)?;
    let mut trajectory = Vec::with_capacity(k_max);
    for k in 1..=k_max {
        if k > 1 {
            current = r.renormalize(&current)?;
        }
        let ratio = stationary_ratios(&current, &dj, Kernel::BlockConstant(j))?.max;
        trajectory.push(hs.eta.powi(k as i32) * ratio);
    }
    let k = trajectory.iter().position(|&v| v < 1.0 - margin).map(|i| i + 1);
    let monotone = trajectory.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9) + 1e-12);
    Ok(UniquenessReport { certified: k.is_some(), k, margin, trajectory, monotone })
}

// ---------------------------------------------------------------------------
// flows

/// Harmonicity tolerance for level-1 input to [`per_cell_flows`].
pub const HARMONIC_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellFlows {
    /// Flows of the eigenform at the boundary values of `h`.
    pub boundary_flows: Vec<f64>,
    /// Flows of `h o F_i` for every cell `i` (0-based), without the `eta` factor.
    pub per_cell: Vec<Vec<f64>>,
    /// Boundary vertices with nonzero flow.
    pub boundary_with_flow: Vec<usize>,
    /// Critical points `c_i` (1-based) carrying nonzero flow.
    pub critical_with_flow: Vec<usize>,
    /// `|sum of boundary flows|`, relative.
    pub p1: f64,
    /// Largest `|flow in cell i + flow in cell i+1|` at a junction, relative.
    pub p2: f64,
    /// Largest `|boundary flow - eta * inner flow|`, relative.
    pub p3: f64,
}

/// Harmonic extension of boundary data to level 1.
pub fn harmonic_level1(s: &MsStructure, hs: &HarmonicStructure, boundary_values: &[f64]) -> Result<Vec<f64>> {
    let r = s.refinement();
    let d1 = r.replicate(&hs.form)?;
    Ok(d1.harmonic_extension(&r.boundary_ids, boundary_values)?.values)
}

pub fn per_cell_flows(s: &MsStructure, hs: &HarmonicStructure, h: &[f64]) -> Result<CellFlows> {
    let r = s.refinement();
    if h.len() != r.vertex_count {
        return Err(Error::VertexMismatch { expected: r.vertex_count, got: h.len() });
    }
    let d1 = r.replicate(&hs.form)?;
    let level_flows = d1.flows(h)?;
    let hmax = h.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let hmin = h.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    let range = (hmax - hmin).max(hmax.abs()).max(hmin.abs());
    let scale = (hs.form.max_weight() * range).max(f64::MIN_POSITIVE);
    let interior_residual = (0..r.vertex_count)
        .filter(|v| !r.boundary_ids.contains(v))
        .map(|v| level_flows[v].abs())
        .fold(0.0_f64, f64::max)
        / scale;
    if interior_residual > HARMONIC_TOL {
        return Err(Error::NonHarmonic(interior_residual));
    }
    let boundary_values: Vec<f64> = r.boundary_ids.iter().map(|&v| h[v]).collect();
    let boundary_flows = hs.form.flows(&boundary_values)?;
    let per_cell: Vec<Vec<f64>> =
        (0..s.cells()).map(|i| hs.form.flows(&r.pull_back(i, h))).collect::<Result<_>>()?;
    let cutoff = HARMONIC_TOL * scale;
    let p1 = boundary_flows.iter().sum::<f64>().abs() / scale;
    let cells = s.cells();
    let mut p2: f64 = 0.0;
    let mut critical_with_flow = Vec::new();
    for i in 0..cells {
        let g = s.glue_index()[i];
        let a = per_cell[i][g];
        let b = per_cell[(i + 1) % cells][g];
        p2 = p2.max((a + b).abs() / scale);
        if a.abs() > cutoff {
            critical_with_flow.push(i + 1);
        }
    }
    let mut p3: f64 = 0.0;
    for x in 0..s.len() {
        let inner = per_cell[s.cell_of()[x] - 1][s.phi_index()[x]];
        p3 = p3.max((boundary_flows[x] - hs.eta * inner).abs() / scale);
    }
    let boundary_with_flow = (0..s.len()).filter(|&x| boundary_flows[x].abs() > cutoff).collect();
    Ok(CellFlows { boundary_flows, per_cell, boundary_with_flow, critical_with_flow, p1, p2, p3 })
}
