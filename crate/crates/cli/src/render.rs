//! Deterministic formatting of floats, exact values and coefficient tables.

use std::collections::{BTreeMap, BTreeSet};

use serde_json::{json, Value};
use so5::exact::to_triples;
use so5::{HalfInt, RadicalSum};

/// Fixed-point text with `precision` decimals and no negative zero.
pub fn fmt_float(x: f64, precision: usize) -> String {
    let s = format!("{:.*}", precision, x);
    match s.strip_prefix('-') {
        Some(rest) if rest.bytes().all(|b| b == b'0' || b == b'.') => rest.to_string(),
        _ => s,
    }
}

/// A JSON number rounded to `precision` decimals.
pub fn json_float(x: f64, precision: usize) -> Value {
    let r: f64 = fmt_float(x, precision).parse().unwrap_or(x);
    serde_json::Number::from_f64(r)
        .map(Value::Number)
        .unwrap_or(Value::Null)
}

fn json_bigint(n: &impl std::fmt::Display) -> Value {
    let s = n.to_string();
    match s.parse::<i64>() {
        Ok(v) => json!(v),
        Err(_) => json!(s),
    }
}

/// Exact value as `[{num, den, radicand}, ...]`.
pub fn json_exact(r: &RadicalSum) -> Value {
    Value::Array(
        to_triples(r)
            .iter()
            .map(|(n, d, rad)| json!({"num": json_bigint(n), "den": json_bigint(d), "radicand": rad}))
            .collect(),
    )
}

/// Serialize with two-space indentation and a trailing newline.
pub fn to_json_string(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values always serialize");
    s.push('\n');
    s
}

/// One coefficient table ready for printing: cells keyed `(m, K)`.
pub struct TableView {
    pub l: HalfInt,
    pub label: String,
    pub cells: BTreeMap<(HalfInt, HalfInt), String>,
}

fn k_minus_m(m: HalfInt, k: HalfInt) -> i32 {
    (k.doubled() - m.doubled()) / 2
}

/// m values from f down to -f.
fn m_values(two_f: u32) -> Vec<HalfInt> {
    let f = two_f as i32;
    (-f..=f)
        .rev()
        .step_by(2)
        .map(HalfInt::from_doubled)
        .collect()
}

fn columns<'a>(tables: impl Iterator<Item = &'a TableView>) -> Vec<i32> {
    let set: BTreeSet<i32> = tables
        .flat_map(|t| t.cells.keys().map(|&(m, k)| k_minus_m(m, k)))
        .collect();
    set.into_iter().rev().collect()
}

fn cell(t: &TableView, m: HalfInt, dk: i32, blank: &str) -> String {
    let k = HalfInt::from_doubled(m.doubled() + 2 * dk);
    match t.cells.get(&(m, k)) {
        Some(s) => s.clone(),
        None if k.abs() <= t.l => "0".to_string(),
        None => blank.to_string(),
    }
}

fn aligned(rows: &[Vec<String>]) -> String {
    let width = rows.iter().map(|r| r.len()).max().unwrap_or(0);
    let widths: Vec<usize> = (0..width)
        .map(|c| {
            rows.iter()
                .filter_map(|r| r.get(c))
                .map(|s| s.chars().count())
                .max()
                .unwrap_or(0)
        })
        .collect();
    let mut out = String::new();
    for r in rows {
        let line: Vec<String> = r
            .iter()
            .enumerate()
            .map(|(c, s)| format!("{}{}", " ".repeat(widths[c] - s.chars().count()), s))
            .collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
    }
    out
}

/// One block per table: rows m, columns K - m.
pub fn tables_text(tables: &[TableView], two_f: u32) -> String {
    let mut out = String::new();
    for t in tables {
        let cols = columns(std::iter::once(t));
        out.push_str(&format!("{}\n", t.label));
        let mut rows = vec![std::iter::once("m \\ K-m".to_string())
            .chain(cols.iter().map(|c| c.to_string()))
            .collect::<Vec<_>>()];
        for m in m_values(two_f) {
            rows.push(
                std::iter::once(m.to_string())
                    .chain(cols.iter().map(|&c| cell(t, m, c, "")))
                    .collect(),
            );
        }
        out.push_str(&aligned(&rows));
        out.push('\n');
    }
    out
}

/// One row per `(L, τ, m)`, one column per `K - m`.
pub fn tables_csv(tables: &[(HalfInt, usize, TableView)], two_f: u32) -> String {
    let cols = columns(tables.iter().map(|(_, _, t)| t));
    let mut out = String::from("2L,tau,2m");
    for c in &cols {
        out.push_str(&format!(",{}", c));
    }
    out.push('\n');
    for (l, tau, t) in tables {
        for m in m_values(two_f) {
            out.push_str(&format!("{},{},{}", l.doubled(), tau, m.doubled()));
            for &c in &cols {
                let v = cell(t, m, c, "");
                if v.contains(',') || v.contains('"') {
                    out.push_str(&format!(",\"{}\"", v.replace('"', "\"\"")));
                } else {
                    out.push_str(&format!(",{}", v));
                }
            }
            out.push('\n');
        }
    }
    out
}

/// A square matrix with row and column labels.
pub fn matrix_text(labels: &[String], m: &so5::Mat, precision: usize) -> String {
    let mut rows = vec![std::iter::once(String::new())
        .chain(labels.iter().cloned())
        .collect::<Vec<_>>()];
    for (i, l) in labels.iter().enumerate() {
        rows.push(
            std::iter::once(l.clone())
                .chain((0..m.cols()).map(|j| fmt_float(m[(i, j)], precision)))
                .collect(),
        );
    }
    aligned(&rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn no_negative_zero() {
        assert_eq!(fmt_float(-1e-9, 6), "0.000000");
        assert_eq!(fmt_float(-0.5, 2), "-0.50");
        assert_eq!(fmt_float(0.4743416, 6), "0.474342");
    }

    #[test]
    fn json_rounding() {
        assert_eq!(json_float(0.12345678, 3).to_string(), "0.123");
        assert_eq!(json_float(-0.0000001, 3).to_string(), "0.0");
    }

    #[test]
    fn exact_triples() {
        let r = so5::exact::parse_radical("2*sqrt(7/328)").unwrap();
        assert_eq!(
            json_exact(&r).to_string(),
            r#"[{"den":82,"num":1,"radicand":574}]"#
        );
    }
}
