use branchop_core::connection::{flat_sections, residue, trace_connection};
use branchop_core::log_side::{hecke_chain, log_to_oper, obstruction_vector, roundtrip_check, verify_log_conditions};
use branchop_core::oper::{compute_phi, normalize_oper, oper_to_log, phi_graded_orders, verify_branched_oper};
use branchop_core::{Error, HeckeChainTrace, LogOperCandidate, OperLocalData, Series, DEFAULT_PRECISION, EXACT};
use serde_json::{json, Map, Value};

use crate::report::{log_checks, mat, oper_checks, oper_data, rat_mat, vector};
use crate::scenario::{render_logconn, render_oper, Built, Scenario};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cmd {
    VerifyOper,
    Oper2Log,
    Obstructions,
    HeckeChain,
    Log2Oper,
    Roundtrip,
    Monodromy,
    Phi,
}

impl Cmd {
    pub fn name(self) -> &'static str {
        match self {
            Cmd::VerifyOper => "verify-oper",
            Cmd::Oper2Log => "oper2log",
            Cmd::Obstructions => "obstructions",
            Cmd::HeckeChain => "hecke-chain",
            Cmd::Log2Oper => "log2oper",
            Cmd::Roundtrip => "roundtrip",
            Cmd::Monodromy => "monodromy",
            Cmd::Phi => "phi",
        }
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct Options {
    pub precision: Option<i64>,
    pub strict_det: Option<bool>,
}

pub const PASS: u8 = 0;
pub const NEGATIVE: u8 = 1;
pub const MALFORMED: u8 = 2;
pub const EXHAUSTED: u8 = 3;

/// A finished report and its exit code.
pub struct Outcome {
    pub report: Value,
    pub code: u8,
    /// Diagnostic for stderr.
    pub diagnostic: Option<String>,
}

/// Why a command stopped early.
enum Stop {
    Malformed(String),
    Math(Error),
}

impl From<Error> for Stop {
    fn from(e: Error) -> Self {
        match e {
            Error::Parse { .. } | Error::Dimension(_) | Error::Shape(_) => Stop::Malformed(e.to_string()),
            other => Stop::Math(other),
        }
    }
}

/// Command specific fields, verdict and the exponent below which every
/// reported coefficient is exact.
struct Body {
    fields: Map<String, Value>,
    pass: bool,
    window: i64,
}

fn window_value(w: i64) -> Value {
    if w >= EXACT / 2 {
        json!("exact")
    } else {
        json!(w)
    }
}

fn verdict(code: u8) -> &'static str {
    match code {
        PASS => "pass",
        NEGATIVE => "fail",
        MALFORMED => "malformed-input",
        _ => "precision-exhausted",
    }
}

pub fn run(cmd: Cmd, label: &str, src: &str, opts: Options) -> Outcome {
    let mut head = Map::new();
    head.insert("command".into(), json!(cmd.name()));
    head.insert("scenario".into(), json!(label));
    let scenario = match Scenario::parse(src) {
        Ok(s) => s,
        Err(e) => return malformed(head, format!("{label}: {e}")),
    };
    let prec = opts.precision.or(scenario.precision).unwrap_or(DEFAULT_PRECISION);
    let strict_det = opts.strict_det.or(scenario.strict_det).unwrap_or(true);
    head.insert("precision".into(), json!({ "requested": prec }));
    head.insert("strict_det".into(), json!(strict_det));
    if prec < 1 {
        return malformed(head, format!("{label}: precision must be positive, got {prec}"));
    }
    let built = match scenario.build(prec) {
        Ok(b) => b,
        Err(e) => return malformed(head, format!("{label}: {e}")),
    };
    finish(head, label, execute(cmd, &built, strict_det))
}

fn malformed(mut head: Map<String, Value>, msg: String) -> Outcome {
    head.insert("verdict".into(), json!(verdict(MALFORMED)));
    head.insert("exit_code".into(), json!(MALFORMED));
    head.insert("error".into(), json!(msg));
    Outcome { report: Value::Object(head), code: MALFORMED, diagnostic: Some(msg) }
}

fn finish(mut head: Map<String, Value>, label: &str, body: Result<Body, Stop>) -> Outcome {
    let (code, diagnostic) = match body {
        Ok(b) => {
            if let Some(Value::Object(p)) = head.get_mut("precision") {
                p.insert("guaranteed_below".into(), window_value(b.window));
            }
            head.extend(b.fields);
            if b.pass {
                (PASS, None)
            } else {
                let why = first_failure(&Value::Object(head.clone())).unwrap_or_else(|| "negative verdict".into());
                (NEGATIVE, Some(format!("{label}: {why}")))
            }
        }
        Err(Stop::Malformed(msg)) => return malformed(head, format!("{label}: {msg}")),
        Err(Stop::Math(e)) => {
            let code = if matches!(e, Error::PrecisionExhausted { .. }) { EXHAUSTED } else { NEGATIVE };
            head.insert("error".into(), error_value(&e));
            (code, Some(format!("{label}: {e}")))
        }
    };
    head.insert("verdict".into(), json!(verdict(code)));
    head.insert("exit_code".into(), json!(code));
    Outcome { report: Value::Object(head), code, diagnostic }
}

/// The first failing check in a report, with its witness.
pub(crate) fn first_failure(v: &Value) -> Option<String> {
    match v {
        Value::Object(m) if m.get("status").and_then(Value::as_str) == Some("fail") => {
            let name = m.get("name").and_then(Value::as_str).unwrap_or("check");
            Some(match m.get("witness").and_then(Value::as_str) {
                Some(w) => format!("{name} fails: {w}"),
                None => format!("{name} fails"),
            })
        }
        Value::Object(m) => m.values().find_map(first_failure),
        Value::Array(a) => a.iter().find_map(first_failure),
        _ => None,
    }
}

fn error_value(e: &Error) -> Value {
    let mut m = Map::new();
    m.insert("message".into(), json!(e.to_string()));
    if let Error::Obstructed { obstruction, final_residue } = e {
        m.insert("obstruction".into(), json!(obstruction.iter().map(ToString::to_string).collect::<Vec<_>>()));
        m.insert("final_residue".into(), json!(rat_mat(final_residue)));
    }
    Value::Object(m)
}

fn execute(cmd: Cmd, built: &Built, strict_det: bool) -> Result<Body, Stop> {
    match cmd {
        Cmd::VerifyOper => verify(oper(built, cmd)?),
        Cmd::Oper2Log => oper2log(oper(built, cmd)?, strict_det),
        Cmd::Roundtrip => roundtrip(oper(built, cmd)?),
        Cmd::Phi => phi(oper(built, cmd)?),
        Cmd::Obstructions => with_candidate(built, strict_det, obstructions),
        Cmd::HeckeChain => with_candidate(built, strict_det, chain),
        Cmd::Log2Oper => with_candidate(built, strict_det, log2oper),
        Cmd::Monodromy => with_candidate(built, strict_det, monodromy),
    }
}

/// Strict form of oper data, with the normalizing gauge when one was needed.
fn strict_form(d: &OperLocalData) -> Result<(OperLocalData, Option<Value>), Stop> {
    if d.is_strict() {
        return Ok((d.clone(), None));
    }
    let (strict, g) = normalize_oper(d)?;
    let rec = json!({
        "u": g.u.iter().map(Series::to_literal).collect::<Vec<_>>(),
        "trace_defect": g.trace_defect.to_literal(),
    });
    Ok((strict, Some(rec)))
}

fn oper(built: &Built, cmd: Cmd) -> Result<&OperLocalData, Stop> {
    match built {
        Built::Oper(d) => Ok(d),
        Built::Log(_) => Err(Stop::Malformed(format!("{} needs an [oper] or [global] payload", cmd.name()))),
    }
}

/// Runs `f` on the candidate given directly, or on the image of oper data.
/// The logarithmic-side conditions are reported either way and must pass.
fn with_candidate(
    built: &Built,
    strict_det: bool,
    f: fn(&LogOperCandidate) -> Result<Body, Stop>,
) -> Result<Body, Stop> {
    let (cand, source, normalized) = match built {
        Built::Log(c) => (c.clone(), "logconn", None),
        Built::Oper(d) => {
            let (strict, g) = strict_form(d)?;
            (oper_to_log(&strict)?, "oper2log", g)
        }
    };
    let checks = verify_log_conditions(&cand, strict_det);
    let mut body = if checks.passed() {
        f(&cand)?
    } else {
        Body { fields: Map::new(), pass: false, window: cand.precision() }
    };
    body.fields.insert("candidate".into(), json!(mat(cand.conn().matrix())));
    body.fields.insert("candidate_source".into(), json!(source));
    if let Some(g) = normalized {
        body.fields.insert("normalizing_gauge".into(), g);
    }
    body.fields.insert("log_conditions".into(), log_checks(&checks));
    Ok(body)
}

fn fields(v: Value) -> Map<String, Value> {
    match v {
        Value::Object(m) => m,
        _ => unreachable!("report bodies are objects"),
    }
}

fn verify(d: &OperLocalData) -> Result<Body, Stop> {
    let rep = verify_branched_oper(d);
    Ok(Body {
        pass: rep.passed(),
        fields: fields(json!({ "oper": oper_data(d), "oper_conditions": oper_checks(&rep) })),
        window: d.precision(),
    })
}

fn oper2log(d: &OperLocalData, strict_det: bool) -> Result<Body, Stop> {
    let rep = verify_branched_oper(d);
    if !rep.passed() {
        let mut b = verify(d)?;
        b.pass = false;
        return Ok(b);
    }
    let (strict, normalized) = strict_form(d)?;
    let cand = oper_to_log(&strict)?;
    let res = residue(cand.conn())?;
    let checks = verify_log_conditions(&cand, strict_det);
    let eigenlines: Map<String, Value> = res
        .eigenlines
        .iter()
        .map(|(l, vs)| {
            let vs: Vec<String> =
                vs.iter().map(|v| format!("[{}]", v.iter().map(ToString::to_string).collect::<Vec<_>>().join(","))).collect();
            (l.to_string(), json!(vs))
        })
        .collect();
    let trace = trace_connection(cand.conn()).matrix()[(0, 0)].to_literal();
    Ok(Body {
        pass: checks.passed(),
        window: cand.precision(),
        fields: fields(json!({
            "oper_conditions": oper_checks(&rep),
            "connection": mat(cand.conn().matrix()),
            "residue": rat_mat(&res.matrix),
            "spectrum": res.spectrum,
            "eigenlines": eigenlines,
            "trace_form": trace,
            "normalizing_gauge": normalized,
            "log_conditions": log_checks(&checks),
            "scenario_text": render_logconn(cand.conn().matrix(), cand.precision()),
        })),
    })
}

fn obstructions(cand: &LogOperCandidate) -> Result<Body, Stop> {
    let m = obstruction_vector(cand)?;
    let named: Map<String, Value> =
        m.values.iter().enumerate().map(|(k, v)| (format!("M_{}", k + 2), json!(v.to_string()))).collect();
    Ok(Body {
        pass: m.vanishes(),
        window: EXACT,
        fields: fields(json!({ "obstruction": named, "vanishes": m.vanishes() })),
    })
}

pub fn chain_value(t: &HeckeChainTrace) -> Value {
    let steps: Vec<Value> = t
        .steps
        .iter()
        .map(|s| {
            json!({
                "kept": s.kept_eigenvalues.iter().collect::<Vec<_>>(),
                "basis": mat(&s.lattice.basis),
                "det_valuation": s.lattice.colength(),
                "spectrum_before": s.spectrum_before(),
                "spectrum_after": s.spectrum_after(),
                "residue_after": rat_mat(&s.residue_after.matrix),
            })
        })
        .collect();
    json!({
        "initial_twist": mat(t.initial_twist.matrix()),
        "steps": steps,
        "final_residue": rat_mat(&t.final_residue),
        "final_residue_vanishes": t.final_residue_vanishes(),
    })
}

fn chain(cand: &LogOperCandidate) -> Result<Body, Stop> {
    let t = hecke_chain(cand)?;
    Ok(Body {
        pass: t.final_residue_vanishes(),
        window: t.final_conn.precision(),
        fields: fields(json!({ "hecke_chain": chain_value(&t) })),
    })
}

fn log2oper(cand: &LogOperCandidate) -> Result<Body, Stop> {
    let rec = log_to_oper(cand)?;
    let rep = verify_branched_oper(&rec.data);
    Ok(Body {
        pass: rep.passed(),
        window: rec.data.precision(),
        fields: fields(json!({
            "recovered": oper_data(&rec.data),
            "frame": mat(&rec.frame),
            "oper_conditions": oper_checks(&rep),
            "final_residue": rat_mat(&rec.chain.final_residue),
            "scenario_text": render_oper(&rec.data, rec.data.precision()),
        })),
    })
}

fn roundtrip(d: &OperLocalData) -> Result<Body, Stop> {
    let rt = roundtrip_check(d)?;
    Ok(Body {
        pass: rt.holds,
        window: rt.window,
        fields: fields(json!({
            "holds": rt.holds,
            "compared_below": rt.window,
            "total_gauge": mat(&rt.total_gauge),
            "final_residue": rat_mat(&rt.final_residue),
            "recovered": oper_data(&rt.recovered),
        })),
    })
}

fn monodromy(cand: &LogOperCandidate) -> Result<Body, Stop> {
    let flat = flat_sections(cand.conn())?;
    let trivial = flat.dim == cand.rank();
    Ok(Body {
        pass: trivial,
        window: flat.precision,
        fields: fields(json!({
            "flat_dimension": flat.dim,
            "rank": cand.rank(),
            "sections": flat.sections.iter().map(|s| vector(s)).collect::<Vec<_>>(),
            "obstructed_resonances": flat.resonance_report,
            "trivial": trivial,
        })),
    })
}

fn phi(d: &OperLocalData) -> Result<Body, Stop> {
    let p = compute_phi(d);
    let det = p.det();
    // Each gamma_i contributes its vanishing order once for every graded
    // piece at or below it.
    let predicted: Option<i64> =
        d.gamma().iter().enumerate().map(|(i, g)| g.valuation().map(|v| (i as i64 + 1) * v)).sum();
    let val = det.valuation();
    Ok(Body {
        pass: val.is_some() && val == predicted,
        window: p.precision(),
        fields: fields(json!({
            "phi": mat(&p),
            "det": det.to_literal(),
            "det_valuation": val,
            "predicted_det_valuation": predicted,
            "graded_orders": phi_graded_orders(&p),
        })),
    })
}

pub fn unreadable(cmd: Cmd, label: &str, err: &str) -> Outcome {
    let mut head = Map::new();
    head.insert("command".into(), json!(cmd.name()));
    head.insert("scenario".into(), json!(label));
    malformed(head, format!("{label}: cannot read: {err}"))
}
