//! Reports are built as JSON values. The `--json` output prints them as is;
//! the human output walks the same value, so both carry the same verdicts.

use std::fmt::Write;

use branchop_core::log_side::LogConditionReport;
use branchop_core::oper::CheckStatus;
use branchop_core::{Laurent, LaurentMat, OperLocalData, OperReport, RatMatrix, Series};
use serde_json::{json, Map, Value};

/// `[[0,0],[1,1/z]]`.
pub fn mat(m: &LaurentMat) -> String {
    grid(m.to_literals())
}

pub fn rat_mat(m: &RatMatrix) -> String {
    grid(m.to_rows().iter().map(|r| r.iter().map(ToString::to_string).collect()).collect())
}

fn grid(rows: Vec<Vec<String>>) -> String {
    let rows: Vec<String> = rows.iter().map(|r| format!("[{}]", r.join(","))).collect();
    format!("[{}]", rows.join(","))
}

pub fn vector(v: &[Laurent]) -> String {
    format!("[{}]", v.iter().map(Series::to_literal).collect::<Vec<_>>().join(","))
}

fn status(s: &CheckStatus) -> &'static str {
    match s {
        CheckStatus::Pass => "pass",
        CheckStatus::Fail => "fail",
        CheckStatus::Absorbed => "absorbed",
        CheckStatus::Skipped => "skipped",
    }
}

fn check(name: String, st: &CheckStatus, witness: &Option<String>) -> Value {
    let mut m = Map::new();
    m.insert("name".into(), json!(name));
    m.insert("status".into(), json!(status(st)));
    if let Some(w) = witness {
        m.insert("witness".into(), json!(w));
    }
    Value::Object(m)
}

pub fn oper_checks(rep: &OperReport) -> Value {
    let checks: Vec<Value> =
        rep.checks.iter().map(|c| check(format!("{}: {}", c.condition, c.name), &c.status, &c.witness)).collect();
    json!({
        "passed": rep.passed(),
        "checks": checks,
        "gamma_valuations": rep.gamma_valuations,
        "strict": rep.strict,
    })
}

pub fn log_checks(rep: &LogConditionReport) -> Value {
    let checks: Vec<Value> =
        rep.checks.iter().map(|c| check(format!("({}) {}", c.label, c.name), &c.status, &c.witness)).collect();
    json!({ "passed": rep.passed(), "checks": checks, "spectrum": rep.spectrum })
}

pub fn oper_data(d: &OperLocalData) -> Value {
    let alpha: Map<String, Value> = d
        .alpha_entries()
        .iter()
        .map(|(&(i, j), s)| (format!("{},{}", i + 1, j + 1), json!(s.to_literal())))
        .collect();
    json!({
        "a": d.a().iter().map(Series::to_literal).collect::<Vec<_>>(),
        "gamma": d.gamma().iter().map(Series::to_literal).collect::<Vec<_>>(),
        "alpha": alpha,
        "matrix": mat(branchop_core::oper::assemble(d).matrix()),
    })
}

/// Human rendering: `verdict` first, then every other key in order.
pub fn human(report: &Value) -> String {
    let mut out = String::new();
    if let Value::Object(m) = report {
        if let Some(v) = m.get("verdict") {
            let _ = writeln!(out, "verdict: {}", scalar(v));
        }
        for (k, v) in m.iter().filter(|(k, _)| *k != "verdict") {
            entry(&mut out, 0, k, v);
        }
    }
    out
}

fn scalar(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => "-".into(),
        other => other.to_string(),
    }
}

fn is_flat(v: &Value) -> bool {
    !matches!(v, Value::Object(_) | Value::Array(_))
}

fn entry(out: &mut String, depth: usize, key: &str, v: &Value) {
    let pad = "  ".repeat(depth);
    match v {
        Value::Object(m) => {
            let _ = writeln!(out, "{pad}{key}:");
            for (k, v) in m {
                entry(out, depth + 1, k, v);
            }
        }
        Value::Array(a) if a.iter().all(is_flat) => {
            let items: Vec<String> = a.iter().map(scalar).collect();
            let _ = writeln!(out, "{pad}{key}: [{}]", items.join(", "));
        }
        Value::Array(a) => {
            let _ = writeln!(out, "{pad}{key}:");
            for (i, v) in a.iter().enumerate() {
                entry(out, depth + 1, &format!("[{}]", i + 1), v);
            }
        }
        other => {
            let _ = writeln!(out, "{pad}{key}: {}", scalar(other));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrices_render_compactly() {
        let m = LaurentMat::parse(&[&["0", "0"], &["1", "z^-1"]], 24).unwrap();
        assert_eq!(mat(&m), "[[0,0],[1,1/z]]");
        let r = RatMatrix::from_i64_rows(&[&[0, 0], &[-1, 0]]);
        assert_eq!(rat_mat(&r), "[[0,0],[-1,0]]");
    }

    #[test]
    fn human_lists_every_verdict() {
        let v = json!({"verdict": "fail", "checks": [{"name": "x", "status": "fail"}], "window": 22});
        let h = human(&v);
        assert!(h.starts_with("verdict: fail\n"));
        assert!(h.contains("status: fail"));
        assert!(h.contains("window: 22"));
    }
}
