use std::fs;

use anyhow::{Context, Result};
use fractal_renorm::graph_directed::{self, CORNER_NAMES};
use fractal_renorm::relations::{self, RhoOptions, DEFAULT_MARGIN, HARMONIC_TOL};
use fractal_renorm::renorm::{self, ETA_AGREEMENT_TOL};
use fractal_renorm::structure::StructureJson;
use fractal_renorm::{
    parse_ratio, AngleContext, ConductanceForm, Error, GdStructure, HarmonicStructure, MsStructure, Refinement,
    SolveOptions, Verdict,
};
use num_integer::Integer;
use serde_json::{json, Value};

use crate::report::Table;
use crate::{CtxArgs, SearchArgs, SolveArgs, Usage};

/// Agreement required between the searched and closed-form GD ratios.
pub const GD_RHO_TOL: f64 = 1e-6;
/// Flow identities must hold to this relative accuracy.
pub const FLOW_TOL: f64 = 1e-9;
/// Level-k resistances restricted to the boundary must reproduce level 0.
pub const RESISTANCE_TOL: f64 = 1e-9;

pub struct Outcome {
    pub input: Value,
    pub outputs: Value,
    pub tolerances: Value,
    pub table: Option<Table>,
    /// Set when the report should still be written but the run failed.
    pub failure: Option<anyhow::Error>,
}

impl Outcome {
    fn ok(input: Value, outputs: Value, tolerances: Value) -> Self {
        Outcome { input, outputs, tolerances, table: None, failure: None }
    }
}

/// Worker count: available cores, capped by `FRACTAL_RENORM_THREADS`.
pub fn threads() -> usize {
    let avail = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    match std::env::var("FRACTAL_RENORM_THREADS").ok().and_then(|v| v.trim().parse::<usize>().ok()) {
        Some(cap) if cap > 0 => avail.min(cap),
        _ => avail,
    }
}

/// Reads a structure from a `structure` report or a bare structure document.
pub fn structure_from_value(value: Value) -> Result<MsStructure> {
    let json = if value.get("schema").is_some() {
        value
            .pointer("/outputs/structure")
            .cloned()
            .ok_or_else(|| Usage("report has no outputs.structure".into()))?
    } else {
        value
    };
    let sj: StructureJson = serde_json::from_value(json)?;
    Ok(MsStructure::from_json(&sj)?)
}

fn load(ctx: &CtxArgs) -> Result<MsStructure> {
    if let Some(path) = &ctx.structure {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        return structure_from_value(serde_json::from_str(&text)?);
    }
    let (Some(n), Some(m), Some(theta)) = (ctx.n, ctx.m, ctx.theta.as_deref()) else {
        return Err(Usage("--n, --m and --theta are required unless --structure is given".into()).into());
    };
    let context = AngleContext::new(n, m, parse_ratio(theta)?)?;
    if let Some(orig) = context.canonicalized_from() {
        log::warn!("theta {orig} reduced to {}", context.theta());
    }
    let symmetrize = ctx.symmetrize || n.gcd(&(m + n)) > 1;
    Ok(MsStructure::build(context, symmetrize)?)
}

fn input_json(s: &MsStructure, ctx: &CtxArgs) -> Value {
    json!({
        "context": s.ctx().to_json(),
        "theta_given": s.ctx().canonicalized_from().map(|r| r.to_string()),
        "symmetrized": s.symmetrized(),
        "symmetrize_each_step": ctx.symmetrize,
    })
}

fn solve_options(ctx: &CtxArgs, solve: &SolveArgs) -> Result<SolveOptions> {
    if !(solve.tol.is_finite() && solve.tol > 0.0) {
        return Err(Usage(format!("--tol must be positive, got {}", solve.tol)).into());
    }
    Ok(SolveOptions { tol: solve.tol, max_iter: solve.max_iter, symmetrize_each_step: ctx.symmetrize, init: None })
}

/// Solves, turning non-convergence into diagnostics instead of an error.
fn try_solve(s: &MsStructure, opts: &SolveOptions) -> Result<std::result::Result<HarmonicStructure, Error>> {
    match renorm::solve_eigenform(s, opts) {
        Ok(hs) => Ok(Ok(hs)),
        Err(e @ Error::NonConvergence(_)) => Ok(Err(e)),
        Err(e) => Err(e.into()),
    }
}

fn diagnostics(e: &Error) -> Value {
    match e {
        Error::NonConvergence(diag) => serde_json::to_value(diag).unwrap_or(Value::Null),
        other => json!({ "reason": other.to_string() }),
    }
}

fn solve_tolerances(tol: f64, residual: Option<f64>) -> Value {
    json!({
        "convergence": tol,
        "residual": residual.map_or(tol, |r| tol.max(r)),
        "eta_agreement": ETA_AGREEMENT_TOL,
    })
}

pub fn structure(ctx: &CtxArgs, levels: usize) -> Result<Outcome> {
    let s = load(ctx)?;
    let sets = s.levels(levels)?;
    let kappa = s.ctx().kappa().ok();
    let outputs = json!({
        "structure": s.to_json(),
        "boundary_size": s.len(),
        "cells": s.cells(),
        "rotation_invariant": s.is_rotation_invariant(),
        "validity": s.ctx().validate(),
        "kappa": kappa,
        "levels": sets.iter().map(|l| l.to_json()).collect::<Vec<_>>(),
    });
    Ok(Outcome::ok(input_json(&s, ctx), outputs, json!({ "angle_arithmetic": 0.0 })))
}

pub fn solve(ctx: &CtxArgs, args: &SolveArgs) -> Result<Outcome> {
    let s = load(ctx)?;
    let opts = solve_options(ctx, args)?;
    let labels = s.labels();
    let input = input_json(&s, ctx);
    match try_solve(&s, &opts)? {
        Ok(hs) => {
            let verification = renorm::verify_harmonic_structure(&s, &hs.form, hs.eta)?;
            let outputs = json!({
                "structure": s.to_json(),
                "harmonic": hs.to_json(&labels)?,
                "verification": verification,
            });
            Ok(Outcome::ok(input, outputs, solve_tolerances(args.tol, Some(hs.residual))))
        }
        Err(e) => {
            let outputs = json!({ "structure": s.to_json(), "diagnostics": diagnostics(&e) });
            Ok(Outcome {
                input,
                outputs,
                tolerances: solve_tolerances(args.tol, None),
                table: None,
                failure: Some(e.into()),
            })
        }
    }
}

fn rho_options(search: &SearchArgs, group: Option<Vec<Vec<usize>>>) -> RhoOptions {
    RhoOptions { restarts: search.restarts, seed: search.seed, group, ..RhoOptions::default() }
}

fn fmt_f64(v: f64) -> String {
    format!("{v:.12e}")
}

pub fn relations(
    ctx: &CtxArgs,
    args: &SolveArgs,
    search: &SearchArgs,
    all: bool,
    cap: usize,
    k_max: usize,
) -> Result<Outcome> {
    let s = load(ctx)?;
    let opts = solve_options(ctx, args)?;
    let names = s.labels();
    let r = s.refinement();
    let workers = threads();
    log::info!("enumerating with {workers} threads");
    let preserved = relations::enumerate_preserved(&s, !all, cap, workers)?;
    let nontrivial: Vec<_> = preserved.iter().filter(|j| !j.is_trivial()).cloned().collect();

    let solution = try_solve(&s, &opts)?;
    let group = if all { None } else { Some(s.rotation_group()?) };
    let verdict = relations::criteria_verdict(&r, &names, solution.is_ok(), &preserved, &rho_options(search, group))?;

    let j_pm = match relations::build_j_plus_minus(&s) {
        Ok(pm) => {
            let describe = |j: &fractal_renorm::Partition| -> Result<Value> {
                Ok(json!({
                    "relation": j.to_json(&names),
                    "preserved": relations::is_preserved(&s, j, false)?,
                    "rotation_invariant": relations::is_preserved(&s, j, true)?,
                }))
            };
            json!({ "plus": describe(&pm.plus)?, "minus": describe(&pm.minus)? })
        }
        Err(e @ Error::KappaUndefined(_)) => json!({ "undefined": e.to_string() }),
        Err(e) => return Err(e.into()),
    };

    let certificates: Vec<Value> = match &solution {
        Ok(hs) => nontrivial
            .iter()
            .map(|j| {
                let cert = match relations::uniqueness_certificate(&r, hs, j, k_max, DEFAULT_MARGIN) {
                    Ok(c) => serde_json::to_value(c)?,
                    Err(e) => json!({ "error": e.to_string() }),
                };
                Ok(json!({ "relation": j.to_json(&names), "certificate": cert }))
            })
            .collect::<Result<_>>()?,
        Err(_) => Vec::new(),
    };

    let mut outputs = json!({
        "enumeration": if all { "all" } else { "rotation_invariant" },
        "preserved": preserved.iter().map(|j| j.to_json(&names)).collect::<Vec<_>>(),
        "nontrivial": nontrivial.len(),
        "j_plus_minus": j_pm,
        "verdict": verdict,
        "uniqueness": certificates,
    });
    match &solution {
        Ok(hs) => outputs["eta"] = json!(hs.eta),
        Err(e) => outputs["diagnostics"] = diagnostics(e),
    }

    let table = Table {
        header: ["relation", "rho_over", "rho_under", "relation_rho_under", "quotient_rho_over", "holds"]
            .map(String::from)
            .to_vec(),
        rows: nontrivial
            .iter()
            .zip(&verdict.witnesses)
            .map(|(j, w)| {
                vec![
                    j.to_string(),
                    fmt_f64(w.rho_over),
                    fmt_f64(w.rho_under),
                    fmt_f64(w.relation_rho_under),
                    fmt_f64(w.quotient_rho_over),
                    w.holds.to_string(),
                ]
            })
            .collect(),
    };

    let failure = match solution {
        Err(e) if verdict.verdict != Verdict::NonexistenceCertified => Some(e.into()),
        _ => None,
    };
    let mut input = input_json(&s, ctx);
    input["all"] = json!(all);
    input["cap"] = json!(cap);
    input["k_max"] = json!(k_max);
    input["restarts"] = json!(search.restarts);
    input["seed"] = json!(search.seed);
    let tolerances = json!({
        "convergence": args.tol,
        "search_min_step": RhoOptions::default().min_step,
        "certificate_margin": DEFAULT_MARGIN,
    });
    Ok(Outcome { input, outputs, tolerances, table: Some(table), failure })
}

fn solved(s: &MsStructure, ctx: &CtxArgs, args: &SolveArgs) -> Result<HarmonicStructure> {
    Ok(renorm::solve_eigenform(s, &solve_options(ctx, args)?)?)
}

/// The level-`k` network `eta^k sum_w D o F_w` on its glued vertex set.
pub fn level_network(s: &MsStructure, hs: &HarmonicStructure, k: usize) -> Result<(ConductanceForm, Vec<usize>)> {
    let levels = s.levels(k)?;
    let mut d = hs.form.clone();
    for lvl in &levels[1..] {
        let r = Refinement {
            boundary_len: d.len(),
            vertex_count: lvl.num_vertices,
            copies: lvl.copies.clone(),
            boundary_ids: lvl.inclusion.clone(),
        };
        d = r.replicate(&d)?.scaled(hs.eta);
    }
    Ok((d, levels[k].boundary_ids.clone()))
}

pub fn resistance(ctx: &CtxArgs, args: &SolveArgs, level: usize) -> Result<Outcome> {
    let s = load(ctx)?;
    let hs = solved(&s, ctx, args)?;
    let (net, boundary) = level_network(&s, &hs, level)?;
    let all: Vec<usize> = (0..net.len()).collect();
    let rk = net.resistance_matrix(&all)?;
    let r0 = hs.form.resistance_matrix(&(0..s.len()).collect::<Vec<_>>())?;
    let scale = r0.iter().fold(0.0_f64, |a, &b| a.max(b.abs()));
    let mut deviation: f64 = 0.0;
    for (a, &x) in boundary.iter().enumerate() {
        for (b, &y) in boundary.iter().enumerate() {
            deviation = deviation.max((rk[(x, y)] - r0[(a, b)]).abs() / scale);
        }
    }
    let names = s.labels();
    let mut labels: Vec<String> = (0..net.len()).map(|v| format!("v{v}")).collect();
    for (a, &x) in boundary.iter().enumerate() {
        labels[x] = names[a].clone();
    }
    let matrix: Vec<Vec<f64>> = (0..rk.nrows()).map(|i| rk.row(i).iter().copied().collect()).collect();
    let table = Table {
        header: std::iter::once(String::new()).chain(labels.iter().cloned()).collect(),
        rows: labels
            .iter()
            .zip(&matrix)
            .map(|(l, row)| std::iter::once(l.clone()).chain(row.iter().map(|&v| fmt_f64(v))).collect())
            .collect(),
    };
    let mut input = input_json(&s, ctx);
    input["level"] = json!(level);
    let outputs = json!({
        "eta": hs.eta,
        "vertices": labels,
        "boundary_ids": boundary,
        "resistance": matrix,
        "boundary_deviation": deviation,
    });
    let tolerances = json!({ "convergence": args.tol, "boundary_consistency": RESISTANCE_TOL });
    let failure = (deviation > RESISTANCE_TOL).then(|| {
        anyhow::Error::from(Error::Internal(format!("level-{level} resistances deviate by {deviation:e} on the boundary")))
    });
    Ok(Outcome { input, outputs, tolerances, table: Some(table), failure })
}

fn parse_values(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|t| {
            t.trim().parse::<f64>().map_err(|e| Usage(format!("bad boundary value {t:?}: {e}")).into())
        })
        .collect()
}

pub fn flows(ctx: &CtxArgs, args: &SolveArgs, values: &str) -> Result<Outcome> {
    let s = load(ctx)?;
    let values = parse_values(values)?;
    if values.len() != s.len() {
        return Err(Error::VertexMismatch { expected: s.len(), got: values.len() }.into());
    }
    let hs = solved(&s, ctx, args)?;
    let h = relations::harmonic_level1(&s, &hs, &values)?;
    let cf = relations::per_cell_flows(&s, &hs, &h)?;
    let names = s.labels();
    let checks = json!({
        "p1": cf.p1 <= FLOW_TOL,
        "p2": cf.p2 <= FLOW_TOL,
        "p3": cf.p3 <= FLOW_TOL,
    });
    let outputs = json!({
        "eta": hs.eta,
        "boundary": names,
        "critical_points": s.glue_points().iter().map(|a| a.to_string()).collect::<Vec<_>>(),
        "level1_values": h,
        "flows": cf,
        "checks": checks,
    });
    let mut input = input_json(&s, ctx);
    input["values"] = json!(values);
    let tolerances = json!({ "convergence": args.tol, "harmonic": HARMONIC_TOL, "flow_identities": FLOW_TOL });
    Ok(Outcome::ok(input, outputs, tolerances))
}

fn corner_labels() -> Vec<String> {
    CORNER_NAMES.iter().map(|s| s.to_string()).collect()
}

fn gd_input(n: u64, m: u64) -> Value {
    json!({ "n": n, "m": m })
}

pub fn gd_build(n: u64, m: u64) -> Result<Outcome> {
    let s = GdStructure::build(n, m)?;
    let names = corner_labels();
    let preserved = graph_directed::gd_preserved_relations(&s)?;
    let outputs = json!({
        "structure": s.to_json(),
        "existence": s.existence(),
        "preserved_relations": preserved.iter().map(|j| j.to_json(&names)).collect::<Vec<_>>(),
    });
    Ok(Outcome::ok(gd_input(n, m), outputs, json!({ "angle_arithmetic": 0.0 })))
}

pub fn gd_solve(n: u64, m: u64, args: &SolveArgs) -> Result<Outcome> {
    let s = GdStructure::build(n, m)?;
    if !(args.tol.is_finite() && args.tol > 0.0) {
        return Err(Usage(format!("--tol must be positive, got {}", args.tol)).into());
    }
    let opts = SolveOptions { tol: args.tol, max_iter: args.max_iter, ..SolveOptions::default() };
    let outcome = graph_directed::gd_solve(&s, &opts)?;
    let mut outputs = json!({
        "existence": outcome.existence,
        "closed_form_eta": (m == 1).then(|| graph_directed::gd_eta_m1(n)),
    });
    match outcome.solution {
        Ok(hs) => {
            outputs["harmonic"] = serde_json::to_value(hs.to_json(&corner_labels())?)?;
            Ok(Outcome::ok(gd_input(n, m), outputs, solve_tolerances(args.tol, Some(hs.residual))))
        }
        Err(diag) => {
            outputs["diagnostics"] = serde_json::to_value(&diag)?;
            Ok(Outcome {
                input: gd_input(n, m),
                outputs,
                tolerances: solve_tolerances(args.tol, None),
                table: None,
                failure: Some(Error::from(diag).into()),
            })
        }
    }
}

pub fn gd_rhos(n: u64, m: u64, search: &SearchArgs) -> Result<Outcome> {
    let s = GdStructure::build(n, m)?;
    let t = graph_directed::gd_relation_rhos(&s, &rho_options(search, None))?;
    let closed = graph_directed::gd_rho_closed_form(n, m);
    let quantities = ["rho_over(J1)", "rho_under(V/J1)", "rho_over(J2)", "rho_under(V/J2)"];
    let brackets = [
        (t.j1_relation.rho_under, t.j1_relation.rho_over),
        (t.j1_quotient.rho_under, t.j1_quotient.rho_over),
        (t.j2_relation.rho_under, t.j2_relation.rho_over),
        (t.j2_quotient.rho_under, t.j2_quotient.rho_over),
    ];
    let values = t.values();
    let rows: Vec<Value> = (0..4)
        .map(|i| {
            json!({
                "quantity": quantities[i],
                "search": values[i],
                "closed_form": closed[i],
                "bracket": [brackets[i].0, brackets[i].1],
            })
        })
        .collect();
    let worst = (0..4).map(|i| (values[i] - closed[i]).abs()).fold(0.0, f64::max);
    let table = Table {
        header: ["quantity", "search", "closed_form", "abs_diff"].map(String::from).to_vec(),
        rows: (0..4)
            .map(|i| {
                vec![
                    quantities[i].to_string(),
                    fmt_f64(values[i]),
                    fmt_f64(closed[i]),
                    fmt_f64((values[i] - closed[i]).abs()),
                ]
            })
            .collect(),
    };
    let outputs = json!({
        "existence": s.existence(),
        "rows": rows,
        "max_closed_form_deviation": worst,
        "criterion_j1": values[0] < values[1],
        "criterion_j2": values[2] < values[3],
    });
    let mut input = gd_input(n, m);
    input["restarts"] = json!(search.restarts);
    input["seed"] = json!(search.seed);
    let tolerances = json!({
        "search_min_step": RhoOptions::default().min_step,
        "closed_form_agreement": GD_RHO_TOL,
    });
    Ok(Outcome { input, outputs, tolerances, table: Some(table), failure: None })
}
