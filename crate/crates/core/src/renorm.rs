//! Replication, the renormalization map `T`, symmetrization and the eigenform solver.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::angle::Angle;
use crate::error::{Error, Result};
use crate::network::{ConductanceForm, FormJson};
use crate::refinement::Refinement;
use crate::structure::MsStructure;

#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub symmetrize_each_step: bool,
    pub init: Option<ConductanceForm>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { tol: 1e-12, max_iter: 100_000, symmetrize_each_step: false, init: None }
    }
}

/// Tolerance within which the two eta estimates must agree.
pub const ETA_AGREEMENT_TOL: f64 = 1e-9;
/// Weights below this fraction of the largest count as zero when judging a limit.
pub const DEGENERACY_TOL: f64 = 1e-9;

/// A converged eigenform `T D = eta^{-1} D`, normalized to unit mass.
#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicStructure {
    pub form: ConductanceForm,
    pub eta: f64,
    /// Rayleigh estimate `D(f) / T D(f)` at the probe `f(x) = x`.
    pub eta_rayleigh: f64,
    pub residual: f64,
    pub iterations: usize,
}

impl HarmonicStructure {
    pub fn to_json(&self, labels: &[String]) -> Result<HarmonicJson> {
        Ok(HarmonicJson {
            eta: self.eta,
            eta_inverse: 1.0 / self.eta,
            eta_rayleigh: self.eta_rayleigh,
            residual: self.residual,
            form: self.form.to_json(labels)?,
            iterations: self.iterations,
            normalization: "mass".into(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarmonicJson {
    pub eta: f64,
    pub eta_inverse: f64,
    pub eta_rayleigh: f64,
    pub residual: f64,
    pub form: FormJson,
    pub iterations: usize,
    pub normalization: String,
}

/// Why and how the fixed-point iteration stopped without an answer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonConvergence {
    pub reason: String,
    pub iterations: usize,
    pub last_change: f64,
    /// Smallest `p <= 8` with the last iterates repeating with period `p`, if any.
    pub period: Option<usize>,
    /// Mass ratio of the final step, an eta estimate along the way.
    pub last_eta: f64,
    /// Upper-triangle weights of the final iterates, oldest first.
    pub last_iterates: Vec<Vec<f64>>,
}

impl fmt::Display for NonConvergence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} after {} iterations (last change {:.3e}", self.reason, self.iterations, self.last_change)?;
        if let Some(p) = self.period {
            write!(f, ", period {p}")?;
        }
        write!(f, ")")
    }
}

pub fn replicate(s: &MsStructure, form: &ConductanceForm) -> Result<ConductanceForm> {
    s.refinement().replicate(form)
}

pub fn renorm_t(s: &MsStructure, form: &ConductanceForm) -> Result<ConductanceForm> {
    s.refinement().renormalize(form)
}

/// Average of the pullbacks of `form` under a group of boundary permutations.
pub fn average_over(group: &[Vec<usize>], form: &ConductanceForm) -> ConductanceForm {
    let mut acc = ConductanceForm::zero(form.len());
    for g in group {
        acc = acc.add(&form.pullback(g)).expect("same size");
    }
    acc.scaled(1.0 / group.len() as f64)
}

pub fn symmetrize(s: &MsStructure, form: &ConductanceForm) -> Result<ConductanceForm> {
    if form.len() != s.len() {
        return Err(Error::VertexMismatch { expected: s.len(), got: form.len() });
    }
    Ok(average_over(&s.rotation_group()?, form))
}

/// Relative sup-norm distance `max|eta T D - D| / max|D|`.
pub fn fixed_point_residual(t_form: &ConductanceForm, form: &ConductanceForm, eta: f64) -> f64 {
    let scale = form.max_weight();
    if scale == 0.0 {
        return f64::INFINITY;
    }
    t_form.scaled(eta).max_abs_diff(form) / scale
}

fn probe(n: usize) -> Vec<f64> {
    (0..n).map(|x| x as f64).collect()
}

/// Normalized power iteration `D <- T(D) / mass(T(D))` on one refinement.
pub fn solve_fixed_point(
    refinement: &Refinement,
    group: Option<&[Vec<usize>]>,
    opts: &SolveOptions,
) -> Result<HarmonicStructure> {
    let b = refinement.boundary_len;
    let sym = |f: ConductanceForm| match group {
        Some(g) => average_over(g, &f),
        None => f,
    };
    let start = opts.init.clone().unwrap_or_else(|| ConductanceForm::complete(b, 1.0));
    if start.len() != b {
        return Err(Error::VertexMismatch { expected: b, got: start.len() });
    }
    let start = sym(start);
    let mass0 = start.mass();
    if !(mass0 > 0.0 && mass0.is_finite()) {
        return Err(Error::DegenerateQuotient("initial form has no positive weight".into()));
    }
    let mut d = start.scaled(1.0 / mass0);
    let mut history: Vec<Vec<f64>> = Vec::new();
    let mut change = f64::INFINITY;
    let mut last_eta = f64::NAN;

    let fail = |reason: &str, iterations, change, last_eta, history: &[Vec<f64>]| {
        Error::from(NonConvergence {
            reason: reason.to_string(),
            iterations,
            last_change: change,
            period: detect_period(history),
            last_eta,
            last_iterates: history.iter().rev().take(4).rev().cloned().collect(),
        })
    };

    for it in 1..=opts.max_iter {
        let mut next = refinement.renormalize(&d)?;
        if opts.symmetrize_each_step {
            next = sym(next);
        }
        let mass = next.mass();
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(fail("renormalized form vanished", it, change, last_eta, &history));
        }
        last_eta = d.mass() / mass;
        let next = next.scaled(1.0 / mass);
        change = next.max_abs_diff(&d) / next.max_weight();
        d = next;
        history.push(d.pair_weights());
        if history.len() > 17 {
            history.remove(0);
        }
        if change < opts.tol {
            let limit_support = d.components_above(DEGENERACY_TOL * d.max_weight()).len();
            if b > 1 && limit_support > 1 {
                return Err(fail("iteration converged to a degenerate form", it, change, last_eta, &history));
            }
            let td = refinement.renormalize(&d)?;
            let eta = d.mass() / td.mass();
            let f = probe(b);
            let eta_rayleigh = d.energy(&f)? / td.energy(&f)?;
            if (eta - eta_rayleigh).abs() > ETA_AGREEMENT_TOL * eta.abs() {
                log::warn!("eta estimates disagree: mass {eta} vs Rayleigh {eta_rayleigh}");
            }
            let residual = fixed_point_residual(&td, &d, eta);
            return Ok(HarmonicStructure { form: d, eta, eta_rayleigh, residual, iterations: it });
        }
    }
    Err(fail("maximum iteration count reached", opts.max_iter, change, last_eta, &history))
}

fn detect_period(history: &[Vec<f64>]) -> Option<usize> {
    let last = history.last()?;
    let scale = last.iter().fold(0.0_f64, |a, &b| a.max(b.abs())).max(f64::MIN_POSITIVE);
    (1..=8).find(|&p| {
        history.len() > 2 * p
            && (0..p).all(|k| {
                let a = &history[history.len() - 1 - k];
                let b = &history[history.len() - 1 - k - p];
                a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-8 * scale)
            })
    })
}

pub fn solve_eigenform(s: &MsStructure, opts: &SolveOptions) -> Result<HarmonicStructure> {
    let group = if opts.symmetrize_each_step { Some(s.rotation_group()?) } else { None };
    solve_fixed_point(&s.refinement(), group.as_deref(), opts)
}

/// Fixed-point residual plus the copy-consistency of harmonic extensions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub residual: f64,
    /// Largest deviation between the level-2 extension restricted to a copy and
    /// the copy's own level-1 extension, relative to the data range.
    pub copy_consistency: f64,
}

pub fn verify_harmonic_structure(s: &MsStructure, form: &ConductanceForm, eta: f64) -> Result<VerifyReport> {
    let levels = s.levels(2)?;
    let r1 = s.refinement();
    let d1 = r1.replicate(form)?;
    let residual = fixed_point_residual(&d1.trace(&r1.boundary_ids)?, form, eta);

    let l2 = &levels[2];
    let r2 = Refinement {
        boundary_len: d1.len(),
        vertex_count: l2.num_vertices,
        copies: l2.copies.clone(),
        boundary_ids: l2.inclusion.clone(),
    };
    let d2 = r2.replicate(&d1)?;
    let n1 = d1.len();
    let mut worst: f64 = 0.0;
    for probe_index in 0..3 {
        let f: Vec<f64> = (0..n1).map(|v| (((v + 1) * (probe_index + 3)) % 7) as f64 - 3.0).collect();
        let ext2 = d2.harmonic_extension(&r2.boundary_ids, &f)?.values;
        for (i, copy) in r1.copies.iter().enumerate() {
            let local: Vec<f64> = copy.iter().map(|&v| f[v]).collect();
            let own = d1.harmonic_extension(&r1.boundary_ids, &local)?.values;
            for (u, &val) in own.iter().enumerate() {
                worst = worst.max((ext2[l2.copies[i][u]] - val).abs());
            }
        }
    }
    Ok(VerifyReport { residual, copy_consistency: worst / 6.0 })
}

/// Reduction of the eigenform to a subset of the boundary.
pub fn restrict_to_subset(s: &MsStructure, hs: &HarmonicStructure, subset: &[Angle]) -> Result<ConductanceForm> {
    let ids = s.indices_of(subset)?;
    if ids.is_empty() {
        return Err(Error::SubsetInvalid("empty subset".into()));
    }
    hs.form.trace(&ids)
}

/// Closed-form renormalization constant of the family `theta = l/(n(m+n))`.
pub fn family_eta(n: u64, m: u64, l: u64) -> f64 {
    let (n, m, l) = (n as f64, m as f64, l as f64);
    let a = m * n / (m + n);
    0.5 + a / 2.0 + 0.5 * ((a - 1.0).powi(2) + 8.0 * l * (n - l) / (m + n)).sqrt()
}
