use thiserror::Error;

use crate::matrix::Matrix;
use crate::Rat;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("series has no nonzero coefficient inside its precision window")]
    ZeroSeries,

    #[error("parse error at column {column}: {message}")]
    Parse { column: usize, message: String },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix is singular within precision")]
    Singular,

    #[error("gauge matrix is singular within precision")]
    SingularGauge,

    #[error("residue spectrum is not integral: offending factor {factor}")]
    NonIntegralSpectrum { factor: String },

    #[error("connection has a pole of order {order} (at most {allowed} allowed)")]
    PoleOrder { order: i64, allowed: i64 },

    #[error("precision exhausted: need a window of {needed} coefficients, have {available}")]
    PrecisionExhausted { needed: i64, available: i64 },

    #[error("residue is not semisimple at eigenvalue {eigenvalue}{}", step_suffix(*.step))]
    NonSemisimpleResidue { eigenvalue: i64, step: Option<usize> },

    #[error("{0} is not an eigenvalue of the residue")]
    NotAnEigenvalue(i64),

    #[error("shape error: {0}")]
    Shape(String),

    #[error("gamma_{index} vanishes to order {valuation}, expected exactly 1")]
    GammaNotSimpleZero { index: usize, valuation: i64 },

    #[error(
        "candidate does not come from a branched oper: obstruction {}, final residue {final_residue}",
        list(obstruction)
    )]
    Obstructed { obstruction: Vec<Rat>, final_residue: Matrix<Rat> },

    #[error("entry ({row},{col}) has a pole at the base point")]
    PoleAtBasepoint { row: usize, col: usize },

    #[error("candidate fails the logarithmic-side conditions: {0}")]
    InvalidCandidate(String),
}

fn step_suffix(step: Option<usize>) -> String {
    step.map(|s| format!(" (hecke step {s})")).unwrap_or_default()
}

fn list(v: &[Rat]) -> String {
    let items: Vec<String> = v.iter().map(ToString::to_string).collect();
    format!("[{}]", items.join(", "))
}
