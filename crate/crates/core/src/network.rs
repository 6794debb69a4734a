//! Conductance networks and their reductions.
//!
//! A [`ConductanceForm`] stores a dense symmetric weight matrix with zero
//! diagonal. Energies sum over unordered pairs,
//! `D(f) = sum_{x<y} w(x,y) (f(x) - f(y))^2`, which equals `f^T L f` for the
//! weighted Laplacian `L`.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative threshold below which a negative reduced weight is rounding noise.
pub const MARKOV_TOL: f64 = 1e-12;
/// Relative rank threshold for pseudo-inverses.
pub const RANK_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct ConductanceForm {
    w: DMatrix<f64>,
}

/// Result of a harmonic extension.
#[derive(Debug, Clone, PartialEq)]
pub struct Extension {
    pub values: Vec<f64>,
    /// Interior vertices with no path to the boundary; they are set to 0.
    pub floating: Vec<usize>,
}

impl ConductanceForm {
    pub fn zero(n: usize) -> Self {
        ConductanceForm { w: DMatrix::zeros(n, n) }
    }

    /// Complete graph with every pair weighted `weight`.
    pub fn complete(n: usize, weight: f64) -> Self {
        let mut w = DMatrix::from_element(n, n, weight);
        w.fill_diagonal(0.0);
        ConductanceForm { w }
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        let mut form = ConductanceForm::zero(n);
        for &(x, y, weight) in edges {
            if x >= n || y >= n {
                return Err(Error::SubsetInvalid(format!("edge ({x},{y}) outside 0..{n}")));
            }
            if x == y {
                return Err(Error::SubsetInvalid(format!("self-pair at vertex {x}")));
            }
            if !(weight.is_finite() && weight >= 0.0) {
                return Err(Error::Parse(format!("weight {weight} on ({x},{y}) is not a nonnegative number")));
            }
            form.add_weight(x, y, weight);
        }
        Ok(form)
    }

    /// Builds a form from a symmetric matrix; the diagonal is ignored.
    pub fn from_matrix(mut w: DMatrix<f64>) -> Self {
        assert!(w.is_square(), "weight matrix must be square");
        w.fill_diagonal(0.0);
        let wt = w.transpose();
        ConductanceForm { w: (w + wt) * 0.5 }
    }

    pub fn len(&self) -> usize {
        self.w.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn weight(&self, x: usize, y: usize) -> f64 {
        self.w[(x, y)]
    }

    pub fn set_weight(&mut self, x: usize, y: usize, weight: f64) {
        if x != y {
            self.w[(x, y)] = weight;
            self.w[(y, x)] = weight;
        }
    }

    pub fn add_weight(&mut self, x: usize, y: usize, weight: f64) {
        if x != y {
            self.w[(x, y)] += weight;
            self.w[(y, x)] += weight;
        }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.w
    }

    /// Positive-weight pairs `(x, y, w)` with `x < y`.
    pub fn edges(&self) -> Vec<(usize, usize, f64)> {
        let n = self.len();
        let mut out = Vec::new();
        for x in 0..n {
            for y in x + 1..n {
                let w = self.w[(x, y)];
                if w > 0.0 {
                    out.push((x, y, w));
                }
            }
        }
        out
    }

    /// Upper-triangle weights in row-major pair order.
    pub fn pair_weights(&self) -> Vec<f64> {
        let n = self.len();
        let mut out = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for x in 0..n {
            for y in x + 1..n {
                out.push(self.w[(x, y)]);
            }
        }
        out
    }

    /// Total conductance over unordered pairs.
    pub fn mass(&self) -> f64 {
        self.w.sum() / 2.0
    }

    pub fn max_weight(&self) -> f64 {
        self.w.iter().fold(0.0_f64, |a, &b| a.max(b))
    }

    pub fn scaled(&self, c: f64) -> Self {
        ConductanceForm { w: &self.w * c }
    }

    pub fn add(&self, other: &ConductanceForm) -> Result<Self> {
        self.check_len(other.len())?;
        Ok(ConductanceForm { w: &self.w + &other.w })
    }

    /// Largest entrywise difference of the weight matrices.
    pub fn max_abs_diff(&self, other: &ConductanceForm) -> f64 {
        (&self.w - &other.w).amax()
    }

    /// `w'(x, y) = w(perm[x], perm[y])`.
    pub fn pullback(&self, perm: &[usize]) -> Self {
        let n = self.len();
        ConductanceForm { w: DMatrix::from_fn(n, n, |i, j| self.w[(perm[i], perm[j])]) }
    }

    pub fn laplacian(&self) -> DMatrix<f64> {
        let mut l = -self.w.clone();
        for i in 0..self.len() {
            l[(i, i)] = self.w.row(i).sum();
        }
        l
    }

    fn check_len(&self, got: usize) -> Result<()> {
        if got != self.len() {
            return Err(Error::VertexMismatch { expected: self.len(), got });
        }
        Ok(())
    }

    pub fn energy(&self, f: &[f64]) -> Result<f64> {
        self.bilinear(f, f)
    }

    /// Polarized energy `D(f, g)`.
    pub fn bilinear(&self, f: &[f64], g: &[f64]) -> Result<f64> {
        self.check_len(f.len())?;
        self.check_len(g.len())?;
        let n = self.len();
        let mut total = 0.0;
        for x in 0..n {
            for y in x + 1..n {
                let w = self.w[(x, y)];
                if w != 0.0 {
                    total += w * (f[x] - f[y]) * (g[x] - g[y]);
                }
            }
        }
        Ok(total)
    }

    /// Flow `sum_y w(x,y) (h(x) - h(y))` out of every vertex.
    pub fn flows(&self, h: &[f64]) -> Result<Vec<f64>> {
        self.check_len(h.len())?;
        let hv = DVector::from_column_slice(h);
        Ok((self.laplacian() * hv).iter().copied().collect())
    }

    /// Connected components of the graph of pairs with weight above `threshold`,
    /// each sorted, ordered by minimum vertex.
    pub fn components_above(&self, threshold: f64) -> Vec<Vec<usize>> {
        let n = self.len();
        let mut comp = vec![usize::MAX; n];
        let mut out = Vec::new();
        for start in 0..n {
            if comp[start] != usize::MAX {
                continue;
            }
            let id = out.len();
            comp[start] = id;
            let mut members = vec![start];
            let mut stack = vec![start];
            while let Some(x) = stack.pop() {
                for y in 0..n {
                    if comp[y] == usize::MAX && self.w[(x, y)] > threshold {
                        comp[y] = id;
                        members.push(y);
                        stack.push(y);
                    }
                }
            }
            members.sort_unstable();
            out.push(members);
        }
        out
    }

    /// Components of the positive-weight support graph.
    pub fn support_components(&self) -> Vec<Vec<usize>> {
        self.components_above(0.0)
    }

    /// True when the support graph is connected (energy vanishes only on constants).
    pub fn is_nondegenerate(&self) -> bool {
        self.len() <= 1 || self.support_components().len() == 1
    }

    /// Sub-form on `subset` (no reduction, just the induced weights).
    pub fn induced(&self, subset: &[usize]) -> Self {
        let k = subset.len();
        ConductanceForm { w: DMatrix::from_fn(k, k, |i, j| self.w[(subset[i], subset[j])]) }
    }

    /// Reduced form on `boundary` (in the given order): for every `f` on the
    /// boundary its energy is the infimum of `D` over all extensions.
    pub fn trace(&self, boundary: &[usize]) -> Result<ConductanceForm> {
        let n = self.len();
        let pos = boundary_positions(n, boundary)?;
        let nb = boundary.len();
        let mut out = DMatrix::zeros(nb, nb);
        let max_in = self.max_weight();

        for comp in self.support_components() {
            let (bc, ic): (Vec<usize>, Vec<usize>) =
                comp.iter().partition(|&&v| pos[v] != usize::MAX);
            if bc.is_empty() || bc.len() == 1 && ic.is_empty() {
                continue;
            }
            let lap = laplacian_on(&self.w, &comp);
            let local = |v: usize| comp.binary_search(&v).unwrap();
            let bl: Vec<usize> = bc.iter().map(|&v| local(v)).collect();
            let il: Vec<usize> = ic.iter().map(|&v| local(v)).collect();
            let schur = schur_complement(&lap, &bl, &il);
            for (a, &va) in bc.iter().enumerate() {
                for (b, &vb) in bc.iter().enumerate().skip(a + 1) {
                    let w = -0.5 * (schur[(a, b)] + schur[(b, a)]);
                    let (pa, pb) = (pos[va], pos[vb]);
                    out[(pa, pb)] = w;
                    out[(pb, pa)] = w;
                }
            }
        }
        clamp_negative(&mut out, max_in);
        Ok(ConductanceForm { w: out })
    }

    /// Energy-minimizing extension of `values` (given on `boundary`, in order).
    pub fn harmonic_extension(&self, boundary: &[usize], values: &[f64]) -> Result<Extension> {
        let n = self.len();
        let pos = boundary_positions(n, boundary)?;
        if values.len() != boundary.len() {
            return Err(Error::VertexMismatch { expected: boundary.len(), got: values.len() });
        }
        let mut out = vec![0.0; n];
        let mut floating = Vec::new();
        for (&b, &v) in boundary.iter().zip(values) {
            out[b] = v;
        }
        for comp in self.support_components() {
            let (bc, ic): (Vec<usize>, Vec<usize>) =
                comp.iter().partition(|&&v| pos[v] != usize::MAX);
            if ic.is_empty() {
                continue;
            }
            if bc.is_empty() {
                floating.extend(ic);
                continue;
            }
            let lap = laplacian_on(&self.w, &comp);
            let local = |v: usize| comp.binary_search(&v).unwrap();
            let bl: Vec<usize> = bc.iter().map(|&v| local(v)).collect();
            let il: Vec<usize> = ic.iter().map(|&v| local(v)).collect();
            let lii = lap.select_rows(&il).select_columns(&il);
            let lib = lap.select_rows(&il).select_columns(&bl);
            let fb = DVector::from_iterator(bc.len(), bc.iter().map(|&v| out[v]));
            let rhs = -(lib * fb);
            let hi = solve_spd(&lii, &rhs);
            for (k, &v) in ic.iter().enumerate() {
                out[v] = hi[k];
            }
        }
        floating.sort_unstable();
        Ok(Extension { values: out, floating })
    }

    /// Effective resistance `1 / (two-point trace weight)`.
    pub fn effective_resistance(&self, p: usize, q: usize) -> Result<f64> {
        if p == q {
            boundary_positions(self.len(), &[p])?;
            return Ok(0.0);
        }
        let w = self.trace(&[p, q])?.weight(0, 1);
        if w > 0.0 {
            Ok(1.0 / w)
        } else {
            Err(Error::Disconnected(p, q))
        }
    }

    /// Pairwise effective resistances on `subset`; unreachable pairs are `+inf`.
    pub fn resistance_matrix(&self, subset: &[usize]) -> Result<DMatrix<f64>> {
        let traced = self.trace(subset)?;
        let k = subset.len();
        let mut r = DMatrix::from_element(k, k, f64::INFINITY);
        for comp in traced.support_components() {
            let g = pseudo_inverse(&laplacian_on(&traced.w, &comp));
            for (a, &x) in comp.iter().enumerate() {
                for (b, &y) in comp.iter().enumerate() {
                    r[(x, y)] = if x == y { 0.0 } else { g[(a, a)] + g[(b, b)] - 2.0 * g[(a, b)] };
                }
            }
        }
        Ok(r)
    }

    pub fn to_json(&self, labels: &[String]) -> Result<FormJson> {
        self.check_len(labels.len())?;
        let edges = self
            .edges()
            .into_iter()
            .map(|(x, y, w)| (labels[x].clone(), labels[y].clone(), w))
            .collect();
        Ok(FormJson { vertices: labels.to_vec(), edges })
    }

    /// Rebuilds a form, ordering vertices as in `labels`.
    pub fn from_json(json: &FormJson, labels: &[String]) -> Result<Self> {
        if json.vertices.len() != labels.len() {
            return Err(Error::VertexMismatch { expected: labels.len(), got: json.vertices.len() });
        }
        let index: HashMap<&str, usize> =
            labels.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
        for v in &json.vertices {
            if !index.contains_key(v.as_str()) {
                return Err(Error::SubsetInvalid(format!("unknown vertex {v:?}")));
            }
        }
        let mut edges = Vec::with_capacity(json.edges.len());
        for (x, y, w) in &json.edges {
            let ix = *index.get(x.as_str()).ok_or_else(|| Error::SubsetInvalid(format!("unknown vertex {x:?}")))?;
            let iy = *index.get(y.as_str()).ok_or_else(|| Error::SubsetInvalid(format!("unknown vertex {y:?}")))?;
            edges.push((ix, iy, *w));
        }
        ConductanceForm::from_edges(labels.len(), &edges)
    }
}

/// Values of a vertex map in index order; every index must be present.
pub fn values_from_map(n: usize, map: &HashMap<usize, f64>) -> Result<Vec<f64>> {
    (0..n).map(|v| map.get(&v).copied().ok_or(Error::MissingValue(v))).collect()
}

/// Wire format `{"vertices":[..],"edges":[[x,y,w],..]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormJson {
    pub vertices: Vec<String>,
    pub edges: Vec<(String, String, f64)>,
}

fn boundary_positions(n: usize, boundary: &[usize]) -> Result<Vec<usize>> {
    if boundary.is_empty() {
        return Err(Error::SubsetInvalid("empty vertex subset".into()));
    }
    let mut pos = vec![usize::MAX; n];
    for (i, &b) in boundary.iter().enumerate() {
        if b >= n {
            return Err(Error::SubsetInvalid(format!("vertex {b} outside 0..{n}")));
        }
        if pos[b] != usize::MAX {
            return Err(Error::SubsetInvalid(format!("vertex {b} listed twice")));
        }
        pos[b] = i;
    }
    Ok(pos)
}

fn laplacian_on(w: &DMatrix<f64>, verts: &[usize]) -> DMatrix<f64> {
    let k = verts.len();
    let mut l = DMatrix::zeros(k, k);
    for (a, &x) in verts.iter().enumerate() {
        let mut deg = 0.0;
        for (b, &y) in verts.iter().enumerate() {
            if a != b {
                l[(a, b)] = -w[(x, y)];
                deg += w[(x, y)];
            }
        }
        l[(a, a)] = deg;
    }
    l
}

fn schur_complement(lap: &DMatrix<f64>, b: &[usize], i: &[usize]) -> DMatrix<f64> {
    let lbb = lap.select_rows(b).select_columns(b);
    if i.is_empty() {
        return lbb;
    }
    let lbi = lap.select_rows(b).select_columns(i);
    let lii = lap.select_rows(i).select_columns(i);
    let x = solve_spd_matrix(&lii, &lbi.transpose());
    lbb - lbi * x
}

fn solve_spd_matrix(a: &DMatrix<f64>, rhs: &DMatrix<f64>) -> DMatrix<f64> {
    match a.clone().cholesky() {
        Some(ch) => ch.solve(rhs),
        None => pseudo_inverse(a) * rhs,
    }
}

fn solve_spd(a: &DMatrix<f64>, rhs: &DVector<f64>) -> DVector<f64> {
    match a.clone().cholesky() {
        Some(ch) => ch.solve(rhs),
        None => pseudo_inverse(a) * rhs,
    }
}

/// Moore-Penrose inverse of a symmetric matrix.
pub fn pseudo_inverse(a: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = a.clone().symmetric_eigen();
    let lmax = eig.eigenvalues.iter().fold(0.0_f64, |m, &l| m.max(l.abs()));
    let cut = RANK_TOL * lmax;
    let inv = eig.eigenvalues.map(|l| if l.abs() > cut { 1.0 / l } else { 0.0 });
    &eig.eigenvectors * DMatrix::from_diagonal(&inv) * eig.eigenvectors.transpose()
}

fn clamp_negative(w: &mut DMatrix<f64>, scale: f64) {
    let limit = MARKOV_TOL * scale;
    for v in w.iter_mut() {
        if *v < 0.0 {
            if -*v > limit {
                log::warn!("reduced weight {v:e} below Markov tolerance {limit:e}; clamped to 0");
            }
            *v = 0.0;
        }
    }
}
