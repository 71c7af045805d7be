//! Built-in worked examples. Each demo is an ordinary scenario file run
//! through a fixed pipeline.

use branchop_core::connection::{flat_sections, residue, trace_connection};
use branchop_core::log_side::{hecke_chain, obstruction_vector, roundtrip_check, verify_log_conditions};
use branchop_core::oper::{assemble, compute_phi, dual_oper, oper_to_log, verify_branched_oper};
use branchop_core::{Error, LogOperCandidate, OperLocalData, DEFAULT_PRECISION};
use clap::ValueEnum;
use serde_json::{json, Map, Value};

use crate::commands::{chain_value, first_failure, Outcome, EXHAUSTED, MALFORMED, NEGATIVE, PASS};
use crate::report::{log_checks, mat, oper_checks, rat_mat, vector};
use crate::scenario::{Built, Scenario};

pub const R2: &str = include_str!("../scenarios/r2.scn");
pub const R3: &str = include_str!("../scenarios/r3.scn");
pub const R3_ALPHA: &str = include_str!("../scenarios/r3-alpha.scn");
pub const WITNESS: &str = include_str!("../scenarios/witness.scn");

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Demo {
    /// Strict rank 2 oper with zero upper entry.
    R2,
    /// Strict rank 3 opers, zero and nonzero upper entries.
    R3,
    /// An obstructed rank 2 candidate.
    Witness,
}

impl Demo {
    pub fn name(self) -> &'static str {
        match self {
            Demo::R2 => "r2",
            Demo::R3 => "r3",
            Demo::Witness => "witness",
        }
    }

    /// Scenario files the demo reads.
    pub fn sources(self) -> &'static [&'static str] {
        match self {
            Demo::R2 => &[R2],
            Demo::R3 => &[R3, R3_ALPHA],
            Demo::Witness => &[WITNESS],
        }
    }
}

fn load(src: &str, precision: Option<i64>) -> Built {
    let s = Scenario::parse(src).expect("built-in scenario parses");
    let prec = precision.or(s.precision).unwrap_or(DEFAULT_PRECISION);
    s.build(prec).expect("built-in scenario builds")
}

fn load_oper(src: &str, precision: Option<i64>) -> OperLocalData {
    match load(src, precision) {
        Built::Oper(d) => d,
        Built::Log(_) => unreachable!("oper scenario"),
    }
}

fn load_log(src: &str, precision: Option<i64>) -> LogOperCandidate {
    match load(src, precision) {
        Built::Log(c) => c,
        Built::Oper(_) => unreachable!("logconn scenario"),
    }
}

/// Oper data, its image and the residue of the image.
fn image(d: &OperLocalData) -> Result<(Map<String, Value>, bool), Error> {
    let rep = verify_branched_oper(d);
    let cand = oper_to_log(d)?;
    let res = residue(cand.conn())?;
    let log = verify_log_conditions(&cand, true);
    let mut m = Map::new();
    m.insert("oper".into(), json!(mat(assemble(d).matrix())));
    m.insert("oper_conditions".into(), oper_checks(&rep));
    m.insert("log_connection".into(), json!(mat(cand.conn().matrix())));
    m.insert("residue".into(), json!(rat_mat(&res.matrix)));
    m.insert("spectrum".into(), json!(res.spectrum));
    m.insert("trace_form".into(), json!(trace_connection(cand.conn()).matrix()[(0, 0)].to_literal()));
    m.insert("log_conditions".into(), log_checks(&log));
    Ok((m, rep.passed() && log.passed()))
}

fn roundtrip_value(d: &OperLocalData) -> Result<(Value, bool), Error> {
    let rt = roundtrip_check(d)?;
    let v = json!({
        "oper": mat(assemble(d).matrix()),
        "holds": rt.holds,
        "compared_below": rt.window,
        "final_residue": rat_mat(&rt.final_residue),
        "total_gauge": mat(&rt.total_gauge),
    });
    Ok((v, rt.holds))
}

fn body(demo: Demo, precision: Option<i64>) -> Result<(Map<String, Value>, bool, i64), Error> {
    match demo {
        Demo::R2 => {
            let d = load_oper(R2, precision);
            let (mut m, mut pass) = image(&d)?;
            let cand = oper_to_log(&d)?;
            let flat = flat_sections(cand.conn())?;
            let phi = compute_phi(&d);
            let chain = hecke_chain(&cand)?;
            let (rt, holds) = roundtrip_value(&d)?;
            let window = [cand.precision(), flat.precision, phi.precision(), roundtrip_check(&d)?.window]
                .into_iter()
                .min()
                .unwrap();
            let dual = dual_oper(&d)?;
            pass &= flat.dim == 2 && chain.final_residue_vanishes() && holds;
            m.insert("flat_sections".into(), json!(flat.sections.iter().map(|s| vector(s)).collect::<Vec<_>>()));
            m.insert("phi".into(), json!(mat(&phi)));
            m.insert("phi_det".into(), json!(phi.det().to_literal()));
            m.insert("hecke_chain".into(), chain_value(&chain));
            m.insert("roundtrip".into(), rt);
            m.insert("dual".into(), json!(mat(assemble(&dual).matrix())));
            Ok((m, pass, window))
        }
        Demo::R3 => {
            let d = load_oper(R3, precision);
            let (mut m, mut pass) = image(&d)?;
            let alpha = load_oper(R3_ALPHA, precision);
            let (rt, holds) = roundtrip_value(&alpha)?;
            let window = oper_to_log(&d)?.precision().min(roundtrip_check(&alpha)?.window);
            pass &= holds;
            m.insert("roundtrip".into(), rt);
            Ok((m, pass, window))
        }
        Demo::Witness => {
            let cand = load_log(WITNESS, precision);
            let res = residue(cand.conn())?;
            let log = verify_log_conditions(&cand, true);
            let ob = obstruction_vector(&cand)?;
            let chain = hecke_chain(&cand)?;
            let flat = flat_sections(cand.conn())?;
            let mut m = Map::new();
            m.insert("candidate".into(), json!(mat(cand.conn().matrix())));
            m.insert("residue".into(), json!(rat_mat(&res.matrix)));
            m.insert("spectrum".into(), json!(res.spectrum));
            m.insert("log_conditions".into(), log_checks(&log));
            let named: Map<String, Value> =
                ob.values.iter().enumerate().map(|(k, v)| (format!("M_{}", k + 2), json!(v.to_string()))).collect();
            m.insert("obstruction".into(), Value::Object(named));
            m.insert("hecke_chain".into(), chain_value(&chain));
            m.insert("flat_dimension".into(), json!(flat.dim));
            let pass = log.passed() && ob.vanishes() && chain.final_residue_vanishes() && flat.dim == 2;
            Ok((m, pass, flat.precision))
        }
    }
}

/// A failing check, else the first nonzero obstruction component.
fn why(m: &Map<String, Value>) -> String {
    let body = Value::Object(m.clone());
    first_failure(&body)
        .or_else(|| {
            let ob = m.get("obstruction")?.as_object()?;
            ob.iter().find(|(_, v)| v.as_str() != Some("0")).map(|(k, v)| format!("{k} = {}", scalar(v)))
        })
        .unwrap_or_else(|| "negative verdict".into())
}

fn scalar(v: &Value) -> &str {
    v.as_str().unwrap_or("?")
}

pub fn run(demo: Demo, precision: Option<i64>) -> Outcome {
    let mut head = Map::new();
    head.insert("command".into(), json!("demo"));
    head.insert("scenario".into(), json!(demo.name()));
    if let Some(p) = precision.filter(|&p| p < 1) {
        let msg = format!("demo {}: precision must be positive, got {p}", demo.name());
        head.insert("verdict".into(), json!("malformed-input"));
        head.insert("exit_code".into(), json!(MALFORMED));
        head.insert("error".into(), json!(msg));
        return Outcome { report: Value::Object(head), code: MALFORMED, diagnostic: Some(msg) };
    }
    let requested = precision.unwrap_or(DEFAULT_PRECISION);
    match body(demo, precision) {
        Ok((m, pass, window)) => {
            let code = if pass { PASS } else { NEGATIVE };
            let diagnostic = (!pass).then(|| format!("demo {}: {}", demo.name(), why(&m)));
            head.insert("precision".into(), json!({ "requested": requested, "guaranteed_below": window }));
            head.extend(m);
            head.insert("verdict".into(), json!(if pass { "pass" } else { "fail" }));
            head.insert("exit_code".into(), json!(code));
            Outcome { report: Value::Object(head), code, diagnostic }
        }
        Err(e) => {
            let code = if matches!(e, Error::PrecisionExhausted { .. }) { EXHAUSTED } else { NEGATIVE };
            head.insert("precision".into(), json!({ "requested": requested }));
            head.insert("error".into(), json!({ "message": e.to_string() }));
            head.insert("verdict".into(), json!(if code == EXHAUSTED { "precision-exhausted" } else { "fail" }));
            head.insert("exit_code".into(), json!(code));
            Outcome { report: Value::Object(head), code, diagnostic: Some(format!("demo {}: {e}", demo.name())) }
        }
    }
}
