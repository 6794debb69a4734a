//! Schema checks and independent recomputation of report claims.

use std::path::Path;

use anyhow::{Context, Result};
use fractal_renorm::graph_directed::{GdJson, CORNER_NAMES};
use fractal_renorm::relations::Witness;
use fractal_renorm::renorm::{fixed_point_residual, HarmonicJson};
use fractal_renorm::structure::StructureJson;
use fractal_renorm::{ConductanceForm, GdStructure, MsStructure, Refinement};
use serde_json::{json, Map, Value};

use crate::report::SCHEMA;
use crate::Invalid;

/// A recomputed residual may exceed the stated tolerance by this factor.
pub const RESIDUAL_SLACK: f64 = 10.0;

#[derive(Default)]
struct Checker {
    passed: Vec<String>,
    problems: Vec<String>,
    recomputed: Map<String, Value>,
}

impl Checker {
    fn check(&mut self, name: &str, ok: bool, detail: impl FnOnce() -> String) {
        if ok {
            self.passed.push(name.to_string());
        } else {
            self.problems.push(format!("{name}: {}", detail()));
        }
    }

    fn fail(&mut self, name: &str, detail: impl std::fmt::Display) {
        self.problems.push(format!("{name}: {detail}"));
    }
}

pub fn validate_file(path: &Path) -> Result<String> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let report: Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let mut c = Checker::default();
    envelope(&mut c, &report);
    if c.problems.is_empty() {
        claims(&mut c, &report);
    }
    if !c.problems.is_empty() {
        return Err(Invalid(c.problems).into());
    }
    let summary = json!({
        "path": path.display().to_string(),
        "valid": true,
        "checks": c.passed,
        "recomputed": c.recomputed,
    });
    let mut out = serde_json::to_string_pretty(&summary)?;
    out.push('\n');
    Ok(out)
}

fn envelope(c: &mut Checker, r: &Value) {
    let Some(obj) = r.as_object() else {
        c.fail("envelope", "report is not a JSON object");
        return;
    };
    c.check("schema", obj.get("schema").and_then(Value::as_str) == Some(SCHEMA), || {
        format!("expected {SCHEMA:?}, found {:?}", obj.get("schema"))
    });
    c.check("tool_version", obj.get("tool_version").is_some_and(Value::is_string), || "missing or not a string".into());
    c.check(
        "command",
        obj.get("command")
            .and_then(Value::as_array)
            .is_some_and(|a| a.iter().all(Value::is_string)),
        || "missing or not an array of strings".into(),
    );
    for key in ["input", "outputs"] {
        c.check(key, obj.get(key).is_some_and(Value::is_object), || "missing or not an object".into());
    }
    c.check(
        "wall_time",
        obj.get("wall_time").and_then(Value::as_f64).is_some_and(|t| t.is_finite() && t >= 0.0),
        || "missing or not a nonnegative number".into(),
    );
    match obj.get("tolerances").and_then(Value::as_object) {
        None => c.fail("tolerances", "missing or not an object"),
        Some(t) if t.is_empty() => c.fail("tolerances", "empty tolerances block"),
        Some(t) => {
            let bad: Vec<&String> = t
                .iter()
                .filter(|(_, v)| !v.as_f64().is_some_and(|x| x.is_finite() && x >= 0.0))
                .map(|(k, _)| k)
                .collect();
            c.check("tolerances", bad.is_empty(), || format!("non-numeric or negative entries {bad:?}"));
        }
    }
}

fn tolerance(c: &mut Checker, r: &Value, key: &str) -> Option<f64> {
    let v = r.pointer(&format!("/tolerances/{key}")).and_then(Value::as_f64);
    if v.is_none() {
        c.fail("tolerances", format!("missing tolerances.{key}"));
    }
    v
}

fn claims(c: &mut Checker, r: &Value) {
    let outputs = &r["outputs"];
    if let Some(st) = outputs.get("structure") {
        if st.get("kind").and_then(Value::as_str) == Some("graph_directed") {
            gd_structure(c, st);
        } else {
            ms_structure(c, r, st);
        }
    }
    if let Some(h) = outputs.get("harmonic") {
        if r["input"].get("context").is_some() {
            ms_harmonic(c, r, h);
        } else {
            gd_harmonic(c, r, h);
        }
    }
    if let Some(m) = outputs.get("resistance") {
        resistance(c, m);
    }
    if let Some(v) = outputs.get("verdict") {
        verdict(c, v);
    }
}

fn parse<T: serde::de::DeserializeOwned>(c: &mut Checker, name: &str, v: &Value) -> Option<T> {
    match serde_json::from_value(v.clone()) {
        Ok(t) => Some(t),
        Err(e) => {
            c.fail(name, e);
            None
        }
    }
}

fn ms_structure(c: &mut Checker, r: &Value, st: &Value) {
    let Some(sj) = parse::<StructureJson>(c, "structure", st) else { return };
    match MsStructure::from_json(&sj) {
        Ok(_) => c.passed.push("structure".into()),
        Err(e) => c.fail("structure", e),
    }
    if let Some(ctx) = r["input"].get("context") {
        let same = serde_json::to_value(&sj.ctx).ok().as_ref() == Some(ctx);
        c.check("context", same, || "input context differs from the structure".into());
    }
}

fn gd_structure(c: &mut Checker, st: &Value) {
    let Some(gj) = parse::<GdJson>(c, "structure", st) else { return };
    match GdStructure::from_json(&gj) {
        Ok(_) => c.passed.push("structure".into()),
        Err(e) => c.fail("structure", e),
    }
}

/// Checks the stated residual and eta fields, then recomputes the residual.
fn harmonic_claims(c: &mut Checker, r: &Value, hj: &HarmonicJson, refinement: &Refinement, form: ConductanceForm) {
    let (Some(tol), Some(agree)) = (tolerance(c, r, "residual"), tolerance(c, r, "eta_agreement")) else {
        return;
    };
    c.check("stated_residual", hj.residual <= tol, || format!("{:e} exceeds tolerance {tol:e}", hj.residual));
    c.check("eta_inverse", (hj.eta * hj.eta_inverse - 1.0).abs() <= agree, || {
        format!("eta {} and eta_inverse {} disagree", hj.eta, hj.eta_inverse)
    });
    c.check("eta_rayleigh", (hj.eta_rayleigh - hj.eta).abs() <= RESIDUAL_SLACK * agree * hj.eta.abs(), || {
        format!("eta {} and eta_rayleigh {} disagree", hj.eta, hj.eta_rayleigh)
    });
    let t = match refinement.renormalize(&form) {
        Ok(t) => t,
        Err(e) => return c.fail("residual", e),
    };
    let residual = fixed_point_residual(&t, &form, hj.eta);
    c.recomputed.insert("residual".into(), json!(residual));
    c.check("residual", residual <= RESIDUAL_SLACK * tol, || {
        format!("recomputed residual {residual:e} exceeds {RESIDUAL_SLACK} x {tol:e}")
    });
}

fn ms_harmonic(c: &mut Checker, r: &Value, h: &Value) {
    let Some(hj) = parse::<HarmonicJson>(c, "harmonic", h) else { return };
    let Some(sj) = parse::<StructureJson>(c, "structure", &r["outputs"]["structure"]) else { return };
    let s = match MsStructure::from_json(&sj) {
        Ok(s) => s,
        Err(e) => return c.fail("structure", e),
    };
    match ConductanceForm::from_json(&hj.form, &s.labels()) {
        Ok(form) => harmonic_claims(c, r, &hj, &s.refinement(), form),
        Err(e) => c.fail("form", e),
    }
}

fn gd_harmonic(c: &mut Checker, r: &Value, h: &Value) {
    let Some(hj) = parse::<HarmonicJson>(c, "harmonic", h) else { return };
    let (Some(n), Some(m)) = (r["input"]["n"].as_u64(), r["input"]["m"].as_u64()) else {
        return c.fail("input", "graph-directed report without n and m");
    };
    let s = match GdStructure::build(n, m) {
        Ok(s) => s,
        Err(e) => return c.fail("structure", e),
    };
    let labels: Vec<String> = CORNER_NAMES.iter().map(|s| s.to_string()).collect();
    match ConductanceForm::from_json(&hj.form, &labels) {
        Ok(form) => harmonic_claims(c, r, &hj, &s.reduced_refinement(), form),
        Err(e) => c.fail("form", e),
    }
}

fn resistance(c: &mut Checker, m: &Value) {
    let Some(rows) = parse::<Vec<Vec<f64>>>(c, "resistance", m) else { return };
    let n = rows.len();
    let square = rows.iter().all(|r| r.len() == n);
    c.check("resistance_shape", square, || "matrix is not square".into());
    if !square {
        return;
    }
    let scale = rows.iter().flatten().fold(0.0_f64, |a, &b| a.max(b.abs())).max(f64::MIN_POSITIVE);
    let mut worst: f64 = 0.0;
    let mut negative = false;
    for i in 0..n {
        worst = worst.max(rows[i][i].abs());
        for j in 0..n {
            worst = worst.max((rows[i][j] - rows[j][i]).abs());
            negative |= rows[i][j] < 0.0;
        }
    }
    c.check("resistance_metric", worst / scale <= 1e-9 && !negative, || {
        format!("asymmetry or nonzero diagonal {worst:e}, negative entries: {negative}")
    });
}

fn verdict(c: &mut Checker, v: &Value) {
    let Some(ws) = v.get("witnesses").and_then(|w| parse::<Vec<Witness>>(c, "witnesses", w)) else { return };
    let bad: Vec<usize> =
        ws.iter().enumerate().filter(|(_, w)| w.holds != (w.rho_over < w.rho_under)).map(|(i, _)| i).collect();
    c.check("witnesses", bad.is_empty(), || format!("holds flag inconsistent for witnesses {bad:?}"));
}
