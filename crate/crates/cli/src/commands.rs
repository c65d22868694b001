//! Subcommand implementations. Each returns its output as a string so that
//! callers decide where it goes.

use std::path::Path;

use anyhow::{anyhow, Context, Result};
use serde_json::{json, Value};
use so5::basis::{build_basis, Basis, BasisSet, CoeffTable};
use so5::branching::{dimension, l_content};
use so5::validate::{validate, ValidationReport};
use so5::{unitary_irrep, IrrepLabel, RadicalSum, UnitaryIrrep};

use crate::args::{Format, OutputSpec};
use crate::goldens::{run_goldens, Comparison, CorpusError, TableReport};
use crate::render::{
    fmt_float, json_exact, json_float, matrix_text, tables_csv, tables_text, to_json_string,
    TableView,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Text for stdout and the process exit code.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Outcome {
    pub stdout: String,
    pub code: i32,
}

impl Outcome {
    fn ok(stdout: String) -> Self {
        Outcome {
            stdout,
            code: EXIT_OK,
        }
    }
}

fn irrep_json(irrep: IrrepLabel) -> serde_json::Map<String, Value> {
    let mut m = serde_json::Map::new();
    m.insert("v".into(), json!(irrep.v));
    m.insert("2f".into(), json!(irrep.two_f));
    m
}

fn unitarize(irrep: IrrepLabel) -> Result<UnitaryIrrep> {
    unitary_irrep(irrep).map_err(|e| anyhow!("{}: {}", irrep, e))
}

/// Angular momentum content.
pub fn branch(irrep: IrrepLabel, opts: &OutputSpec) -> Result<Outcome> {
    let content = l_content(irrep).map_err(|e| anyhow!("{}: {}", irrep, e))?;
    let dim = dimension(irrep);
    let out = match opts.format {
        Format::Text => {
            let mut s = format!("{} dimension {}\n", irrep, dim);
            s.push_str("L  multiplicity\n");
            for (l, n) in &content {
                s.push_str(&format!("{}  {}\n", l, n));
            }
            s
        }
        Format::Json => {
            let mut m = irrep_json(irrep);
            m.insert("dimension".into(), json!(dim));
            m.insert(
                "levels".into(),
                Value::Array(
                    content
                        .iter()
                        .map(|(l, n)| json!({"2L": l.doubled(), "multiplicity": n}))
                        .collect(),
                ),
            );
            to_json_string(&Value::Object(m))
        }
        Format::Csv => {
            let mut s = String::from("2L,multiplicity\n");
            for (l, n) in &content {
                s.push_str(&format!("{},{}\n", l.doubled(), n));
            }
            s
        }
    };
    Ok(Outcome::ok(out))
}

fn exact_view(t: &CoeffTable<RadicalSum>) -> TableView {
    TableView {
        l: t.l,
        label: format!("L = {}  τ = {}", t.l, t.tau + 1),
        cells: t.entries.iter().map(|(k, v)| (*k, v.render())).collect(),
    }
}

fn float_view(t: &CoeffTable<f64>, label: String, precision: usize) -> TableView {
    TableView {
        l: t.l,
        label,
        cells: t
            .entries
            .iter()
            .map(|(k, v)| (*k, fmt_float(*v, precision)))
            .collect(),
    }
}

fn float_entries_json(t: &CoeffTable<f64>, precision: usize) -> Value {
    Value::Array(
        t.entries
            .iter()
            .map(|((m, k), v)| json!({"2m": m.doubled(), "2K": k.doubled(), "value": json_float(*v, precision)}))
            .collect(),
    )
}

fn exact_levels_json(b: &BasisSet<RadicalSum>) -> Value {
    Value::Array(
        b.levels
            .values()
            .flatten()
            .map(|t| {
                let entries: Vec<Value> = t
                    .entries
                    .iter()
                    .map(|((m, k), v)| json!({"2m": m.doubled(), "2K": k.doubled(), "value": json_exact(v)}))
                    .collect();
                json!({"2L": t.l.doubled(), "tau": t.tau, "entries": entries})
            })
            .collect(),
    )
}

fn float_levels_json(b: &BasisSet<f64>, precision: usize) -> Value {
    Value::Array(
        b.levels
            .values()
            .flatten()
            .map(|t| json!({"2L": t.l.doubled(), "tau": t.tau, "entries": float_entries_json(t, precision)}))
            .collect(),
    )
}

/// Coupled basis coefficients, exact when requested and available.
pub fn basis(irrep: IrrepLabel, opts: &OutputSpec) -> Result<Outcome> {
    let built = build_basis(irrep).map_err(|e| anyhow!("{}: {}", irrep, e))?;
    let p = opts.precision;
    let (exact, note) = match (&built, opts.exact) {
        (Basis::Exact(b), true) => (Some(b), None),
        (Basis::Inexact { reason, .. }, true) => (
            None,
            Some(format!(
                "exact arithmetic unavailable ({}); values are floating point",
                reason
            )),
        ),
        _ => (None, None),
    };
    let float = built.to_f64();
    let out = match opts.format {
        Format::Text => {
            let mut s = format!(
                "{} coupled basis, {}\n",
                irrep,
                if exact.is_some() {
                    "exact"
                } else {
                    "floating point"
                }
            );
            if let Some(n) = &note {
                s.push_str(&format!("note: {}\n", n));
            }
            s.push('\n');
            let views: Vec<TableView> = match exact {
                Some(b) => b.levels.values().flatten().map(exact_view).collect(),
                None => float
                    .levels
                    .values()
                    .flatten()
                    .map(|t| float_view(t, format!("L = {}  τ = {}", t.l, t.tau + 1), p))
                    .collect(),
            };
            s.push_str(&tables_text(&views, irrep.two_f));
            s
        }
        Format::Json => {
            let mut m = irrep_json(irrep);
            m.insert("exact".into(), json!(exact.is_some()));
            if let Some(n) = &note {
                m.insert("note".into(), json!(n));
            }
            m.insert(
                "levels".into(),
                match exact {
                    Some(b) => exact_levels_json(b),
                    None => float_levels_json(&float, p),
                },
            );
            to_json_string(&Value::Object(m))
        }
        Format::Csv => {
            let views: Vec<_> = match exact {
                Some(b) => b
                    .levels
                    .values()
                    .flatten()
                    .map(|t| (t.l, t.tau, exact_view(t)))
                    .collect(),
                None => float
                    .levels
                    .values()
                    .flatten()
                    .map(|t| (t.l, t.tau, float_view(t, String::new(), p)))
                    .collect(),
            };
            tables_csv(&views, irrep.two_f)
        }
    };
    Ok(Outcome::ok(out))
}

fn node_labels(u: &UnitaryIrrep) -> Vec<String> {
    u.nodes.iter().map(|n| n.to_string()).collect()
}

fn a_tables_json(u: &UnitaryIrrep, precision: usize) -> Value {
    let mut m = irrep_json(u.irrep);
    m.insert("route".into(), json!(u.route.to_string()));
    m.insert("exact_basis".into(), json!(u.exact_basis));
    m.insert("exact_blocks".into(), json!(u.exact_blocks));
    m.insert(
        "states".into(),
        Value::Array(
            u.nodes
                .iter()
                .zip(&u.a_tables)
                .map(|(n, t)| json!({"2L": n.l.doubled(), "alpha": n.alpha, "entries": float_entries_json(t, precision)}))
                .collect(),
        ),
    );
    Value::Object(m)
}

fn reduced_json(u: &UnitaryIrrep, precision: usize) -> Value {
    let mut m = irrep_json(u.irrep);
    m.insert(
        "states".into(),
        Value::Array(
            u.nodes
                .iter()
                .map(|n| json!({"2L": n.l.doubled(), "alpha": n.alpha}))
                .collect(),
        ),
    );
    m.insert("rows".into(), json!("target"));
    m.insert(
        "reduced".into(),
        Value::Array(
            (0..u.nodes.len())
                .map(|i| {
                    Value::Array(
                        (0..u.nodes.len())
                            .map(|j| json_float(u.reduced[(i, j)], precision))
                            .collect(),
                    )
                })
                .collect(),
        ),
    );
    Value::Object(m)
}

fn oblocks_json(u: &UnitaryIrrep, precision: usize) -> Value {
    let mut m = irrep_json(u.irrep);
    m.insert(
        "blocks".into(),
        Value::Array(
            u.blocks
                .iter()
                .map(|((ls, lt), b)| {
                    let rows: Vec<Value> = (0..b.rows())
                        .map(|i| {
                            Value::Array(
                                (0..b.cols())
                                    .map(|j| json_float(b[(i, j)], precision))
                                    .collect(),
                            )
                        })
                        .collect();
                    json!({"2L_source": ls.doubled(), "2L_target": lt.doubled(), "matrix": rows})
                })
                .collect(),
        ),
    );
    Value::Object(m)
}

/// Human-readable tables: coefficients per state, then reduced elements.
pub fn report_text(u: &UnitaryIrrep, precision: usize) -> String {
    let mut s = format!(
        "{} dimension {} route {} exact basis {} exact blocks {}\n\n",
        u.irrep,
        u.dimension(),
        u.route,
        u.exact_basis,
        u.exact_blocks
    );
    s.push_str("a-coefficients\n\n");
    let views: Vec<TableView> = u
        .nodes
        .iter()
        .zip(&u.a_tables)
        .map(|(n, t)| float_view(t, format!("L = {}  α = {}", n.l, n.alpha + 1), precision))
        .collect();
    s.push_str(&tables_text(&views, u.irrep.two_f));
    s.push_str("reduced matrix elements <row||O||column>\n\n");
    s.push_str(&matrix_text(&node_labels(u), &u.reduced, precision));
    s
}

fn a_tables_csv(u: &UnitaryIrrep, precision: usize) -> String {
    let views: Vec<_> = u
        .nodes
        .iter()
        .zip(&u.a_tables)
        .map(|(n, t)| (n.l, n.alpha, float_view(t, String::new(), precision)))
        .collect();
    tables_csv(&views, u.irrep.two_f)
}

fn reduced_csv(u: &UnitaryIrrep, precision: usize) -> String {
    let labels = node_labels(u);
    let mut s = format!("row\\column,{}\n", labels.join(","));
    for (i, l) in labels.iter().enumerate() {
        let cells: Vec<String> = (0..labels.len())
            .map(|j| fmt_float(u.reduced[(i, j)], precision))
            .collect();
        s.push_str(&format!("{},{}\n", l, cells.join(",")));
    }
    s
}

fn write(dir: &Path, name: &str, text: &str) -> Result<()> {
    let path = dir.join(name);
    std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
}

/// Orthonormal coefficients and reduced matrix elements.
pub fn irrep(
    irrep: IrrepLabel,
    opts: &OutputSpec,
    out: Option<&Path>,
    dump_oblocks: bool,
) -> Result<Outcome> {
    let u = unitarize(irrep)?;
    let p = opts.precision;
    let report = report_text(&u, p);
    if let Some(dir) = out {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        write(dir, "a-tables.json", &to_json_string(&a_tables_json(&u, p)))?;
        write(dir, "reduced.json", &to_json_string(&reduced_json(&u, p)))?;
        write(dir, "report.txt", &report)?;
        if dump_oblocks {
            write(dir, "oblocks.json", &to_json_string(&oblocks_json(&u, p)))?;
        }
    }
    let stdout = match opts.format {
        Format::Text => report,
        Format::Json => {
            let mut v = json!({"a_tables": a_tables_json(&u, p), "reduced": reduced_json(&u, p)});
            if dump_oblocks {
                v["oblocks"] = oblocks_json(&u, p);
            }
            to_json_string(&v)
        }
        Format::Csv => format!("{}\n{}", a_tables_csv(&u, p), reduced_csv(&u, p)),
    };
    Ok(Outcome::ok(stdout))
}

fn residuals(r: &ValidationReport) -> [(&'static str, f64); 7] {
    [
        ("commutators", r.commutators),
        ("coupled_commutators", r.coupled_commutators),
        ("hermiticity", r.hermiticity),
        ("adjoint", r.adjoint),
        ("same_l_off_diagonal", r.same_l_off_diagonal),
        ("casimir", r.casimir),
        ("normalization", r.normalization),
    ]
}

/// Closure residuals, relative for the coupled-basis check.
fn coupled_scale(u: &UnitaryIrrep) -> f64 {
    let content = l_content(u.irrep).unwrap_or_default();
    let g = so5::validate::reconstruct_from_blocks(&content, &u.blocks);
    let s = g.octupole.iter().map(|m| m.max_abs()).fold(1.0, f64::max);
    s * s
}

/// Every residual check against `tol`.
pub fn validate_cmd(irrep: IrrepLabel, opts: &OutputSpec, tol: f64) -> Result<Outcome> {
    let u = unitarize(irrep)?;
    let r = validate(&u);
    let scale = coupled_scale(&u);
    let checks: Vec<(&str, f64, bool)> = residuals(&r)
        .into_iter()
        .map(|(name, x)| {
            let limit = if name == "coupled_commutators" {
                tol * scale
            } else {
                tol
            };
            (name, x, x <= limit)
        })
        .collect();
    let pass = checks.iter().all(|c| c.2);
    let out = match opts.format {
        Format::Text => {
            let mut s = format!(
                "{} dimension {} route {} tolerance {:e}\n",
                irrep, r.dimension, u.route, tol
            );
            for (name, x, ok) in &checks {
                s.push_str(&format!(
                    "{:<20} {:.3e}  {}\n",
                    name,
                    x,
                    if *ok { "ok" } else { "FAIL" }
                ));
            }
            s.push_str(if pass { "PASS\n" } else { "FAIL\n" });
            s
        }
        Format::Json => {
            let mut m = irrep_json(irrep);
            m.insert("dimension".into(), json!(r.dimension));
            m.insert("route".into(), json!(u.route.to_string()));
            m.insert("tolerance".into(), json!(tol));
            let mut res = serde_json::Map::new();
            for (name, x, ok) in &checks {
                res.insert(
                    (*name).into(),
                    json!({"residual": format!("{:.3e}", x), "ok": ok}),
                );
            }
            m.insert("residuals".into(), Value::Object(res));
            m.insert("pass".into(), json!(pass));
            to_json_string(&Value::Object(m))
        }
        Format::Csv => {
            let mut s = String::from("check,residual,ok\n");
            for (name, x, ok) in &checks {
                s.push_str(&format!("{},{:.3e},{}\n", name, x, ok));
            }
            s
        }
    };
    Ok(Outcome {
        stdout: out,
        code: if pass { EXIT_OK } else { EXIT_VALIDATION },
    })
}

fn comparison_label(c: Comparison) -> String {
    match c {
        Comparison::Content => "content".into(),
        Comparison::Exact => "exact".into(),
        Comparison::Float(t) => format!("tol {:e}", t),
    }
}

/// Compare against the corpus in `dir`. A missing corpus is an error, not a
/// failed comparison.
pub fn goldens(dir: &Path, opts: &OutputSpec) -> std::result::Result<Outcome, CorpusError> {
    let reports: Vec<TableReport> = run_goldens(dir)?;
    let pass = reports.iter().all(|r| r.passed());
    let out = match opts.format {
        Format::Text => {
            let mut s = String::new();
            for r in &reports {
                s.push_str(&format!(
                    "{:<4} {:<18} {:<12} cells {:>4}  max deviation {:.3e}\n",
                    if r.passed() { "PASS" } else { "FAIL" },
                    r.name,
                    comparison_label(r.comparison),
                    r.checked,
                    r.max_deviation
                ));
                for m in &r.mismatches {
                    s.push_str(&format!("     mismatch: {}\n", m));
                }
                for n in &r.notes {
                    s.push_str(&format!("     note: {}\n", n));
                }
            }
            s.push_str(if pass {
                "all tables match\n"
            } else {
                "some tables differ\n"
            });
            s
        }
        Format::Json => {
            let tables: Vec<Value> = reports
                .iter()
                .map(|r| {
                    json!({
                        "name": r.name,
                        "comparison": comparison_label(r.comparison),
                        "cells": r.checked,
                        "max_deviation": format!("{:.3e}", r.max_deviation),
                        "pass": r.passed(),
                        "mismatches": r.mismatches,
                        "notes": r.notes,
                    })
                })
                .collect();
            to_json_string(&json!({"tables": tables, "pass": pass}))
        }
        Format::Csv => {
            let mut s = String::from("table,comparison,cells,max_deviation,pass\n");
            for r in &reports {
                s.push_str(&format!(
                    "{},{},{},{:.3e},{}\n",
                    r.name,
                    comparison_label(r.comparison),
                    r.checked,
                    r.max_deviation,
                    r.passed()
                ));
            }
            s
        }
    };
    Ok(Outcome {
        stdout: out,
        code: if pass { EXIT_OK } else { EXIT_VALIDATION },
    })
}
