//! Logarithmic connections on the twisted jet bundle: the conditions that
//! characterize images of branched opers, the obstruction scalars, the
//! inverse Hecke chain and the round trip back to oper data.
//!
//! Candidates live in the adapted frame: the flag is the coordinate flag
//! `span(e_1..e_j)` and the connection is zero below the subdiagonal.

use std::collections::BTreeSet;
use std::fmt;

use num_traits::Zero;

use crate::connection::{gauge_transform, residue, twist_by_point_power, MeroConnection, ResidueData};
use crate::error::{Error, Result};
use crate::hecke::{hecke_modify, HeckeStep};
use crate::oper::{assemble, jet_gauge, normalize_oper, oper_to_log, CheckStatus, OperLocalData};
use crate::scalar::Scalar;
use crate::series::{Series, DEFAULT_PRECISION, EXACT};
use crate::{Laurent, LaurentMat, Rat, RatMatrix};

#[derive(Clone, Debug, PartialEq)]
pub struct LogOperCandidate {
    conn: MeroConnection,
}

impl LogOperCandidate {
    pub fn new(conn: MeroConnection) -> Result<Self> {
        if !conn.is_logarithmic() {
            return Err(Error::PoleOrder { order: conn.pole_bound(), allowed: 1 });
        }
        if conn.rank() < 2 {
            return Err(Error::Shape("candidate rank must be at least 2".into()));
        }
        Ok(LogOperCandidate { conn })
    }

    pub fn from_matrix(m: LaurentMat) -> Result<Self> {
        Self::new(MeroConnection::new(m)?)
    }

    pub fn conn(&self) -> &MeroConnection {
        &self.conn
    }

    pub fn rank(&self) -> usize {
        self.conn.rank()
    }

    pub fn precision(&self) -> i64 {
        self.conn.precision()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LogCheck {
    pub label: char,
    pub name: &'static str,
    pub status: CheckStatus,
    pub witness: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LogConditionReport {
    pub checks: Vec<LogCheck>,
    pub spectrum: Option<Vec<i64>>,
}

impl LogConditionReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.status != CheckStatus::Fail)
    }

    /// Passing ignoring the determinant check.
    pub fn structural_passed(&self) -> bool {
        self.checks.iter().filter(|c| c.label != 'e').all(|c| c.status != CheckStatus::Fail)
    }

    pub fn failures(&self) -> impl Iterator<Item = &LogCheck> {
        self.checks.iter().filter(|c| c.status == CheckStatus::Fail)
    }
}

impl fmt::Display for LogConditionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            let tag = match c.status {
                CheckStatus::Pass => "pass",
                CheckStatus::Fail => "FAIL",
                CheckStatus::Absorbed => "absorbed",
                CheckStatus::Skipped => "skipped",
            };
            write!(f, "({}) {}: {}", c.label, c.name, tag)?;
            if let Some(w) = &c.witness {
                write!(f, " [{w}]")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

fn check(label: char, name: &'static str, failure: Option<String>) -> LogCheck {
    let status = if failure.is_some() { CheckStatus::Fail } else { CheckStatus::Pass };
    LogCheck { label, name, status, witness: failure }
}

/// Eigenvectors `v_0, ..., v_{r-1}` of the residue for eigenvalues
/// `0, ..., r-1`, each scaled so that its last possibly nonzero coordinate
/// (`v_i[i]`) is 1. Fails with a witness string if the spectrum is wrong or an
/// eigenline leaves its flag step.
fn adapted_eigenbasis(res: &ResidueData, r: usize) -> std::result::Result<Vec<Vec<Rat>>, String> {
    let expected: Vec<i64> = (0..r as i64).collect();
    if res.spectrum != expected {
        return Err(format!("spectrum {:?}", res.spectrum));
    }
    let mut basis = Vec::with_capacity(r);
    for i in 0..r {
        let v = &res.eigenspace(i as i64)[0];
        if let Some(k) = (i + 1..r).find(|&k| !v[k].is_zero()) {
            return Err(format!("eigenvector for {i} has nonzero coordinate {}", k + 1));
        }
        let lead = v[i].clone();
        basis.push(v.iter().map(|x| x.clone() / lead.clone()).collect());
    }
    Ok(basis)
}

/// Checks (a) transversality, (b) unit second fundamental forms, (c) residue
/// spectrum `{0, ..., r-1}`, (d) nested eigenlines and, when `strict_det` is
/// set, (e) trace form `(r(r-1)/2)/z`.
pub fn verify_log_conditions(cand: &LogOperCandidate, strict_det: bool) -> LogConditionReport {
    let r = cand.rank();
    let m = cand.conn.matrix();
    let mut checks = Vec::new();

    let below = (0..r)
        .flat_map(|i| (0..r).map(move |j| (i, j)))
        .find(|&(i, j)| i > j + 1 && !m[(i, j)].is_zero());
    checks.push(check(
        'a',
        "transversality",
        below.map(|(i, j)| format!("entry ({},{}) = {}", i + 1, j + 1, m[(i, j)].to_literal())),
    ));

    let one = Series::<Rat>::one();
    let sub = (0..r - 1).find(|&i| !m[(i + 1, i)].agrees_with(&one));
    checks.push(check(
        'b',
        "second fundamental forms equal 1",
        sub.map(|i| format!("entry ({},{}) = {}", i + 2, i + 1, m[(i + 1, i)].to_literal())),
    ));

    let res = residue(&cand.conn);
    let mut spectrum = None;
    let (c_fail, d_fail) = match &res {
        Err(e) => (Some(e.to_string()), Some("no integral spectrum".to_string())),
        Ok(res) => {
            spectrum = Some(res.spectrum.clone());
            let expected: Vec<i64> = (0..r as i64).collect();
            if res.spectrum != expected {
                (
                    Some(format!("spectrum {:?}", res.spectrum)),
                    Some("spectrum is not {0, ..., r-1}".to_string()),
                )
            } else {
                (None, adapted_eigenbasis(res, r).err())
            }
        }
    };
    checks.push(check('c', "residue spectrum is {0, ..., r-1}", c_fail));
    checks.push(check('d', "eigenline i lies in the first i+1 coordinates", d_fail));

    if strict_det {
        let tr = m.trace();
        let expected = Series::monomial(Rat::from_i64((r * (r - 1) / 2) as i64), -1);
        checks.push(check(
            'e',
            "determinant condition: trace form r(r-1)/(2z)",
            (!tr.agrees_with(&expected)).then(|| format!("trace = {}", tr.to_literal())),
        ));
    } else {
        checks.push(LogCheck {
            label: 'e',
            name: "determinant condition: trace form r(r-1)/(2z)",
            status: CheckStatus::Skipped,
            witness: None,
        });
    }
    LogConditionReport { checks, spectrum }
}

fn require_conditions(cand: &LogOperCandidate) -> Result<Vec<Vec<Rat>>> {
    let report = verify_log_conditions(cand, false);
    if !report.structural_passed() {
        let first = report.failures().next().expect("a failed check");
        return Err(Error::InvalidCandidate(format!(
            "check ({}) {}{}",
            first.label,
            first.name,
            first.witness.as_ref().map(|w| format!(": {w}")).unwrap_or_default()
        )));
    }
    let res = residue(&cand.conn)?;
    Ok(adapted_eigenbasis(&res, cand.rank()).expect("checked above"))
}

/// The scalars `M_2, ..., M_r`, in the `(dz)^2` trivialization.
#[derive(Clone, Debug, PartialEq)]
pub struct ObstructionVector {
    pub values: Vec<Rat>,
}

impl ObstructionVector {
    pub fn vanishes(&self) -> bool {
        self.values.iter().all(Zero::is_zero)
    }
}

impl fmt::Display for ObstructionVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let items: Vec<String> = self.values.iter().map(ToString::to_string).collect();
        write!(f, "[{}]", items.join(", "))
    }
}

/// Obstruction scalars with the canonical lift of each eigenvector.
pub fn obstruction_vector(cand: &LogOperCandidate) -> Result<ObstructionVector> {
    obstruction_vector_with(cand, &[])
}

/// Obstruction scalars computed with lifts `v_{j-1} + z u_j(z)`, where
/// `corrections[j-2] = u_j` (missing entries mean `u_j = 0`).
///
/// For each level `j`, the lift is a section of the bundle twisted by
/// `(j-1)` times the point; applying the twisted connection
/// `A - (j-1)/z` gives a holomorphic vector whose value at the point is
/// expanded in the eigenbasis. `M_j` is its coefficient along `v_{j-2}`.
pub fn obstruction_vector_with(
    cand: &LogOperCandidate,
    corrections: &[Vec<Laurent>],
) -> Result<ObstructionVector> {
    let basis = require_conditions(cand)?;
    let r = cand.rank();
    let vmat = RatMatrix::from_columns(&basis);
    let mut values = Vec::with_capacity(r - 1);
    for j in 2..=r {
        let twisted = twist_by_point_power(&cand.conn, (j - 1) as i64);
        let mut lift: Vec<Laurent> =
            basis[j - 1].iter().map(|c| Series::monomial(c.clone(), 0)).collect();
        if let Some(u) = corrections.get(j - 2) {
            if u.len() != r {
                return Err(Error::Dimension(format!("lift correction of length {}", u.len())));
            }
            if let Some(bad) = u.iter().find(|s| !s.is_holomorphic()) {
                return Err(Error::Shape(format!("lift correction {} has a pole", bad.to_literal())));
            }
            for (l, c) in lift.iter_mut().zip(u) {
                *l = &*l + &c.shift(1);
            }
        }
        let applied = twisted.matrix().mul_vec(&lift);
        let image: Vec<Laurent> = lift.iter().zip(&applied).map(|(l, a)| &l.derivative() + a).collect();
        if let Some(bad) = image.iter().find(|s| !s.is_holomorphic()) {
            return Err(Error::InvalidCandidate(format!(
                "twisted lift is not holomorphic: {}",
                bad.to_literal()
            )));
        }
        let at_zero = RatMatrix::from_columns(&[image.iter().map(|s| s.coeff(0)).collect()]);
        let coords = vmat.solve(&at_zero).ok_or(Error::Singular)?;
        values.push(coords[(j - 2, 0)].clone());
    }
    Ok(ObstructionVector { values })
}

#[derive(Clone, Debug, PartialEq)]
pub struct HeckeChainTrace {
    /// The candidate twisted by `(r-1)` times the point.
    pub initial_twist: MeroConnection,
    pub steps: Vec<HeckeStep>,
    pub final_conn: MeroConnection,
    pub final_residue: RatMatrix,
    /// Product of the step bases, in the coordinates of the twisted frame.
    pub lattice: LaurentMat,
}

impl HeckeChainTrace {
    pub fn final_residue_vanishes(&self) -> bool {
        self.final_residue.is_zero()
    }

    /// Multiplicity of eigenvalue 0 after each step.
    pub fn zero_multiplicities(&self) -> Vec<usize> {
        self.steps.iter().map(|s| s.residue_after.multiplicity(0)).collect()
    }

    /// After step `j` the spectrum is `0` with multiplicity `j+1` together with
    /// `-1, ..., j+1-r`.
    pub fn spectra_follow_pattern(&self) -> bool {
        let r = self.final_residue.rows() as i64;
        self.steps.iter().enumerate().all(|(idx, s)| {
            let j = idx as i64 + 1;
            let mut expected: Vec<i64> = (j + 1 - r..0).collect();
            expected.extend(std::iter::repeat(0).take((j + 1) as usize));
            expected.sort_unstable();
            s.spectrum_after() == expected.as_slice()
        })
    }

    pub fn final_residue_nilpotent(&self) -> bool {
        let n = self.final_residue.rows();
        let mut p = RatMatrix::identity(n);
        for _ in 0..n {
            p = &p * &self.final_residue;
        }
        p.is_zero()
    }
}

/// Twists by `(r-1)` times the point, then performs `r-1` Hecke modifications,
/// each keeping the whole eigenvalue-0 eigenspace.
pub fn hecke_chain(cand: &LogOperCandidate) -> Result<HeckeChainTrace> {
    require_conditions(cand)?;
    let r = cand.rank();
    let initial_twist = twist_by_point_power(&cand.conn, r as i64 - 1);
    let keep = BTreeSet::from([0]);
    let mut current = initial_twist.clone();
    let mut lattice = LaurentMat::identity(r);
    let mut steps = Vec::with_capacity(r - 1);
    for idx in 1..r {
        let step = hecke_modify(&current, &keep).map_err(|e| match e {
            Error::NonSemisimpleResidue { eigenvalue, .. } => {
                Error::NonSemisimpleResidue { eigenvalue, step: Some(idx) }
            }
            other => other,
        })?;
        lattice = &lattice * &step.lattice.basis;
        current = step.conn_after.clone();
        steps.push(step);
    }
    let final_residue = residue(&current)?.matrix;
    Ok(HeckeChainTrace { initial_twist, steps, final_conn: current, final_residue, lattice })
}

/// Whether the chain ends with zero residue. A defective eigenvalue-0 block
/// part way through counts as failure: the chain cannot continue and the
/// candidate does not come from an oper.
pub fn chain_trivializes(cand: &LogOperCandidate) -> Result<bool> {
    match hecke_chain(cand) {
        Ok(trace) => Ok(trace.final_residue_vanishes()),
        Err(Error::NonSemisimpleResidue { .. }) => Ok(false),
        Err(e) => Err(e),
    }
}

/// Oper data recovered from a candidate, with the frame it is read in.
#[derive(Clone, Debug, PartialEq)]
pub struct RecoveredOper {
    pub data: OperLocalData,
    /// Basis of the recovered bundle in candidate coordinates: upper
    /// triangular, so it is adapted to the coordinate flag.
    pub frame: LaurentMat,
    pub chain: HeckeChainTrace,
}

/// Runs the Hecke chain and, when the final residue vanishes, reads the
/// resulting holomorphic connection as oper data in the flag induced by the
/// coordinate flag. The adapted basis is the column Hermite form of the
/// chain lattice.
pub fn log_to_oper(cand: &LogOperCandidate) -> Result<RecoveredOper> {
    let chain = hecke_chain(cand)?;
    if !chain.final_residue_vanishes() {
        let obstruction = obstruction_vector(cand)?;
        return Err(Error::Obstructed {
            obstruction: obstruction.values,
            final_residue: chain.final_residue.clone(),
        });
    }
    let r = cand.rank();
    let working = if cand.precision() >= EXACT / 2 {
        DEFAULT_PRECISION
    } else {
        cand.precision()
    };
    // Undo the initial twist: its frame is z^{-(r-1)} times the candidate's.
    let lattice = chain.lattice.shift(-(r as i64 - 1)).truncate(working + 2 * r as i64);
    let mut frame = lattice.column_hermite_form()?;
    let conn = gauge_transform(&cand.conn, &frame)?;
    if !conn.is_holomorphic() {
        return Err(Error::InvalidCandidate(format!(
            "recovered connection has a pole of order {}",
            conn.pole_bound()
        )));
    }
    let mut data = OperLocalData::from_matrix(conn.matrix())?;
    if !data.is_strict() {
        let (strict, gauge) = normalize_oper(&data)?;
        frame = &frame * &gauge.matrix();
        data = strict;
    }
    Ok(RecoveredOper { data, frame, chain })
}

#[derive(Clone, Debug, PartialEq)]
pub struct RoundTrip {
    pub holds: bool,
    /// Exponents below this bound were compared.
    pub window: i64,
    /// Composite gauge from the original frame to the recovered one.
    pub total_gauge: LaurentMat,
    pub recovered: OperLocalData,
    pub final_residue: RatMatrix,
}

/// Sends oper data (normalized first if it is not strict) to its
/// logarithmic connection and back, then compares
/// the original connection, gauged by the composite recorded frame change,
/// with the recovered one on exponents below `N - r`.
pub fn roundtrip_check(data: &OperLocalData) -> Result<RoundTrip> {
    let r = data.rank();
    let n = if data.precision() >= EXACT / 2 {
        DEFAULT_PRECISION
    } else {
        data.precision()
    };
    let (strict, normalizing) = if data.is_strict() {
        (data.clone(), LaurentMat::identity(r))
    } else {
        let (d, g) = normalize_oper(data)?;
        (d, g.matrix())
    };
    let cand = oper_to_log(&strict)?;
    let rec = log_to_oper(&cand)?;
    let total = &(&normalizing * &jet_gauge(r)) * &rec.frame;
    let window = n - r as i64;
    let unimodular = total.is_holomorphic()
        && total.is_upper_triangular()
        && total.det().valuation() == Some(0);
    let lhs = gauge_transform(&assemble(data), &total)?;
    let rhs = assemble(&rec.data);
    let holds = unimodular
        && lhs.precision() >= window
        && rhs.precision() >= window
        && lhs.matrix().agrees_below(rhs.matrix(), window);
    Ok(RoundTrip {
        holds,
        window,
        total_gauge: total,
        recovered: rec.data,
        final_residue: rec.chain.final_residue,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn cand(rows: &[&[&str]]) -> LogOperCandidate {
        LogOperCandidate::from_matrix(LaurentMat::parse(rows, 20).unwrap()).unwrap()
    }

    fn witness(c: &str) -> LogOperCandidate {
        let entry = format!("{c}*z^-1");
        cand(&[&["0", &entry], &["1", "z^-1"]])
    }

    #[test]
    fn conditions_on_examples() {
        let genuine = cand(&[&["0", "0"], &["1", "z^-1"]]);
        assert!(verify_log_conditions(&genuine, true).passed());
        assert!(verify_log_conditions(&witness("1"), true).passed());
        let bad = cand(&[&["0", "0"], &["2", "z^-1"]]);
        let rep = verify_log_conditions(&bad, true);
        assert_eq!(rep.failures().map(|c| c.label).collect::<Vec<_>>(), vec!['b']);
    }

    #[test]
    fn obstruction_rank_two() {
        assert!(obstruction_vector(&cand(&[&["0", "0"], &["1", "z^-1"]])).unwrap().vanishes());
        let m = obstruction_vector(&witness("1")).unwrap();
        assert_eq!(m.values, vec![Rat::from_i64(-1)]);
        let m = obstruction_vector(&witness("3")).unwrap();
        assert_eq!(m.values, vec![Rat::from_i64(-9)]);
    }

    #[test]
    fn chain_rank_two() {
        let genuine = hecke_chain(&cand(&[&["0", "0"], &["1", "z^-1"]])).unwrap();
        assert!(genuine.final_residue_vanishes());
        assert_eq!(
            genuine.steps[0].lattice.basis,
            LaurentMat::parse(&[&["0", "z"], &["1", "0"]], EXACT).unwrap()
        );
        assert_eq!(genuine.zero_multiplicities(), vec![2]);

        let w = hecke_chain(&witness("1")).unwrap();
        assert_eq!(w.final_residue, RatMatrix::from_i64_rows(&[&[0, 0], &[-1, 0]]));
        assert!(w.final_residue_nilpotent());
        assert!(matches!(log_to_oper(&witness("1")), Err(Error::Obstructed { .. })));
    }

    #[test]
    fn roundtrip_small() {
        let d = OperLocalData::strict(2, BTreeMap::new(), 24).unwrap();
        let rt = roundtrip_check(&d).unwrap();
        assert!(rt.holds);
        assert!(rt.recovered.agrees_with(&d));

        let mut alpha = BTreeMap::new();
        alpha.insert((0, 1), Series::parse("1", 24).unwrap());
        alpha.insert((0, 2), Series::parse("z", 24).unwrap());
        let d = OperLocalData::strict(3, alpha, 24).unwrap();
        assert!(roundtrip_check(&d).unwrap().holds);
    }
}
