//! Local data of a branched oper at one point, in a frame adapted to its flag.
//!
//! The connection matrix has diagonal forms `a_i`, subdiagonal entries
//! `gamma_i` (the second fundamental forms) and strictly upper entries
//! `alpha_ij`; everything below the subdiagonal vanishes.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Zero};

use crate::connection::{gauge_transform, MeroConnection};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::series::{Series, EXACT};
use crate::{Laurent, LaurentMat, Rat, RatMatrix};

#[derive(Clone, Debug, PartialEq)]
pub struct OperLocalData {
    a: Vec<Laurent>,
    gamma: Vec<Laurent>,
    /// Strictly upper entries keyed by 0-based `(i, j)` with `i < j`.
    alpha: BTreeMap<(usize, usize), Laurent>,
}

impl OperLocalData {
    pub fn new(
        a: Vec<Laurent>,
        gamma: Vec<Laurent>,
        alpha: BTreeMap<(usize, usize), Laurent>,
    ) -> Result<Self> {
        let r = a.len();
        if r < 2 {
            return Err(Error::Shape(format!("rank must be at least 2, got {r}")));
        }
        if gamma.len() != r - 1 {
            return Err(Error::Shape(format!(
                "rank {r} needs {} subdiagonal entries, got {}",
                r - 1,
                gamma.len()
            )));
        }
        if let Some(i) = a.iter().position(|s| !s.is_holomorphic()) {
            return Err(Error::Shape(format!("a[{}] has a pole", i + 1)));
        }
        for (&(i, j), s) in &alpha {
            if i >= j || j >= r {
                return Err(Error::Shape(format!(
                    "alpha[{}][{}] is not strictly upper triangular in rank {r}",
                    i + 1,
                    j + 1
                )));
            }
            if !s.is_holomorphic() {
                return Err(Error::Shape(format!("alpha[{}][{}] has a pole", i + 1, j + 1)));
            }
        }
        let alpha = alpha.into_iter().filter(|(_, s)| !(s.is_zero() && s.is_exact())).collect();
        Ok(OperLocalData { a, gamma, alpha })
    }

    /// Strict data: `gamma_i = z`, traceless zero diagonal, the given upper
    /// entries, everything known below `prec`.
    pub fn strict(r: usize, alpha: BTreeMap<(usize, usize), Laurent>, prec: i64) -> Result<Self> {
        let z = Series::from_terms([(1, Rat::one())], prec);
        Self::new(vec![Series::zero(prec); r], vec![z; r.saturating_sub(1)], alpha)
    }

    /// Reads a holomorphic connection matrix as oper data. Fails if anything
    /// below the subdiagonal is nonzero or if an entry has a pole.
    pub fn from_matrix(m: &LaurentMat) -> Result<Self> {
        let r = m.rows();
        if !m.is_square() {
            return Err(Error::Shape("connection matrix is not square".into()));
        }
        for i in 0..r {
            for j in 0..r {
                if i > j + 1 && !m[(i, j)].is_zero() {
                    return Err(Error::Shape(format!(
                        "entry ({},{}) below the subdiagonal is {}",
                        i + 1,
                        j + 1,
                        m[(i, j)].to_literal()
                    )));
                }
            }
        }
        let a = (0..r).map(|i| m[(i, i)].clone()).collect();
        let gamma = (0..r.saturating_sub(1)).map(|i| m[(i + 1, i)].clone()).collect();
        let mut alpha = BTreeMap::new();
        for i in 0..r {
            for j in i + 1..r {
                alpha.insert((i, j), m[(i, j)].clone());
            }
        }
        Self::new(a, gamma, alpha)
    }

    pub fn rank(&self) -> usize {
        self.a.len()
    }

    pub fn a(&self) -> &[Laurent] {
        &self.a
    }

    pub fn gamma(&self) -> &[Laurent] {
        &self.gamma
    }

    pub fn alpha(&self, i: usize, j: usize) -> Laurent {
        self.alpha.get(&(i, j)).cloned().unwrap_or_else(Series::exact_zero)
    }

    pub fn alpha_entries(&self) -> &BTreeMap<(usize, usize), Laurent> {
        &self.alpha
    }

    pub fn precision(&self) -> i64 {
        self.a
            .iter()
            .chain(&self.gamma)
            .chain(self.alpha.values())
            .map(Series::precision)
            .min()
            .unwrap_or(EXACT)
    }

    pub fn is_strict(&self) -> bool {
        self.gamma.iter().all(is_exactly_z)
    }

    /// Entrywise agreement of the assembled matrices on the overlap of
    /// guaranteed windows.
    pub fn agrees_with(&self, other: &Self) -> bool {
        self.rank() == other.rank() && assemble(self).matrix().agrees_with(assemble(other).matrix())
    }
}

fn is_exactly_z(g: &Laurent) -> bool {
    g.precision() > 1 && g.terms().count() == 1 && g.coeff(1).is_one()
}

/// The holomorphic connection with the oper block shape.
pub fn assemble(data: &OperLocalData) -> MeroConnection {
    let r = data.rank();
    let m = LaurentMat::from_fn(r, r, |i, j| {
        if i == j {
            data.a[i].clone()
        } else if i == j + 1 {
            data.gamma[j].clone()
        } else if i < j {
            data.alpha(i, j)
        } else {
            Series::exact_zero()
        }
    });
    MeroConnection::new(m).expect("square matrix")
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CheckStatus {
    Pass,
    Fail,
    /// Holds by the choice of local frames.
    Absorbed,
    /// Disabled by the caller.
    Skipped,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConditionCheck {
    pub condition: u8,
    pub name: &'static str,
    pub status: CheckStatus,
    pub witness: Option<String>,
}

impl ConditionCheck {
    fn new(condition: u8, name: &'static str, failure: Option<String>) -> Self {
        let status = if failure.is_some() { CheckStatus::Fail } else { CheckStatus::Pass };
        ConditionCheck { condition, name, status, witness: failure }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OperReport {
    pub checks: Vec<ConditionCheck>,
    /// Vanishing order of each `gamma_i` (`None` if it vanishes on the whole
    /// window).
    pub gamma_valuations: Vec<Option<i64>>,
    /// Every `gamma_i` is literally `z`.
    pub strict: bool,
}

impl OperReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.status != CheckStatus::Fail)
    }

    pub fn failures(&self) -> impl Iterator<Item = &ConditionCheck> {
        self.checks.iter().filter(|c| c.status == CheckStatus::Fail)
    }
}

impl fmt::Display for OperReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            let tag = match c.status {
                CheckStatus::Pass => "pass",
                CheckStatus::Fail => "FAIL",
                CheckStatus::Absorbed => "absorbed",
                CheckStatus::Skipped => "skipped",
            };
            write!(f, "condition {} ({}): {}", c.condition, c.name, tag)?;
            if let Some(w) = &c.witness {
                write!(f, " [{w}]")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Checks the computable branched-oper conditions: trivial trace (3),
/// transversality (4) and simple vanishing of every second fundamental
/// form (5). Conditions 1 and 2 hold by the frame conventions.
pub fn verify_branched_oper(data: &OperLocalData) -> OperReport {
    let mut checks = vec![
        ConditionCheck {
            condition: 1,
            name: "first subbundle identification",
            status: CheckStatus::Absorbed,
            witness: None,
        },
        ConditionCheck {
            condition: 2,
            name: "graded quotient identifications",
            status: CheckStatus::Absorbed,
            witness: None,
        },
    ];
    let trace = data.a.iter().fold(Series::exact_zero(), |acc, s| &acc + s);
    checks.push(ConditionCheck::new(
        3,
        "trivial induced connection on the determinant",
        (!trace.is_zero()).then(|| format!("trace = {}", trace.to_literal())),
    ));
    let conn = assemble(data);
    let m = conn.matrix();
    let r = data.rank();
    let mut shape = None;
    'outer: for i in 0..r {
        for j in 0..r {
            if i > j + 1 && !m[(i, j)].is_zero() {
                shape = Some(format!("entry ({},{}) is nonzero", i + 1, j + 1));
                break 'outer;
            }
        }
    }
    checks.push(ConditionCheck::new(4, "griffiths transversality", shape));
    let gamma_valuations: Vec<Option<i64>> = data.gamma.iter().map(Series::valuation).collect();
    let bad = gamma_valuations.iter().enumerate().find(|(_, v)| **v != Some(1));
    checks.push(ConditionCheck::new(
        5,
        "second fundamental forms vanish to order exactly one",
        bad.map(|(i, v)| match v {
            Some(v) => format!("gamma_{} vanishing order {v}", i + 1),
            None => format!("gamma_{} vanishes on the whole window", i + 1),
        }),
    ));
    OperReport { checks, gamma_valuations, strict: data.is_strict() }
}

/// The diagonal gauge produced by [`normalize_oper`].
#[derive(Clone, Debug, PartialEq)]
pub struct DiagonalGauge {
    pub u: Vec<Laurent>,
    /// `sum_i u_i'/u_i`, the amount by which the trace moved.
    pub trace_defect: Laurent,
}

impl DiagonalGauge {
    pub fn matrix(&self) -> LaurentMat {
        LaurentMat::diagonal(&self.u)
    }
}

/// Rescales the frame by `u_1 = 1`, `u_{i+1} = u_i gamma_i / z` so that every
/// subdiagonal entry becomes `z`. The trace is not rebalanced; its change is
/// returned as the defect.
pub fn normalize_oper(data: &OperLocalData) -> Result<(OperLocalData, DiagonalGauge)> {
    for (i, g) in data.gamma.iter().enumerate() {
        match g.valuation() {
            Some(1) => {}
            v => {
                return Err(Error::GammaNotSimpleZero {
                    index: i + 1,
                    valuation: v.unwrap_or(g.precision()),
                })
            }
        }
    }
    let mut u = vec![Series::one()];
    for g in &data.gamma {
        let next = &u[u.len() - 1] * &g.shift(-1);
        u.push(next);
    }
    let gauge = LaurentMat::diagonal(&u);
    let conn = gauge_transform(&assemble(data), &gauge)?;
    let out = OperLocalData::from_matrix(conn.matrix())?;
    let mut defect = Series::exact_zero();
    for ui in &u {
        defect = &defect + &(&ui.derivative() * &ui.inv()?);
    }
    Ok((out, DiagonalGauge { u, trace_defect: defect }))
}

/// The gauge `diag(1, z, ..., z^{r-1})` turning oper data into a logarithmic
/// connection on the twisted jet bundle.
pub fn jet_gauge(r: usize) -> LaurentMat {
    LaurentMat::diagonal(&(0..r as i64).map(Series::z_pow).collect::<Vec<_>>())
}

/// The logarithmic connection `g^-1 A g + g^-1 g'` for
/// `g = diag(1, z, ..., z^{r-1})`.
pub fn oper_to_log(data: &OperLocalData) -> Result<crate::log_side::LogOperCandidate> {
    for (i, g) in data.gamma.iter().enumerate() {
        if g.valuation() != Some(1) {
            return Err(Error::GammaNotSimpleZero {
                index: i + 1,
                valuation: g.valuation().unwrap_or(g.precision()),
            });
        }
    }
    let conn = gauge_transform(&assemble(data), &jet_gauge(data.rank()))?;
    crate::log_side::LogOperCandidate::new(conn)
}

/// The matrix of the map from flat sections to jets of their last
/// coordinate: row `k`, column `j` is the `k`-th derivative at the base point
/// `x` of the last coordinate of the flat section with initial value `e_j`.
///
/// With `P_0 = I` and `P_{k+1} = P_k' - P_k A`, the `k`-th derivative of
/// `P_0 s` along a flat section `s` is `P_k s`, so row `k` is the last row
/// of `P_k`, read as a series in `x`.
pub fn compute_phi(data: &OperLocalData) -> LaurentMat {
    let a = assemble(data);
    let a = a.matrix();
    let r = data.rank();
    let mut p = LaurentMat::identity(r);
    let mut rows = Vec::with_capacity(r);
    for k in 0..r {
        rows.push((0..r).map(|j| p[(r - 1, j)].clone()).collect::<Vec<_>>());
        if k + 1 < r {
            p = &p.derivative() - &(&p * a);
        }
    }
    LaurentMat::from_rows(rows)
}

/// Vanishing order of the graded pieces of [`compute_phi`]: entry `j-1` is
/// the valuation of row `r-j`, column `j-1`, expected to be `r - j` for
/// strict data.
pub fn phi_graded_orders(phi: &LaurentMat) -> Vec<Option<i64>> {
    let r = phi.rows();
    (1..=r).map(|j| phi[(r - j, j - 1)].valuation()).collect()
}

/// The constant gauge taking `-A^T` to oper shape: reverse the coordinates
/// and alternate signs.
pub fn dual_gauge(r: usize) -> RatMatrix {
    RatMatrix::from_fn(r, r, |i, j| {
        if i + j + 1 == r {
            if j % 2 == 0 {
                Rat::one()
            } else {
                -Rat::one()
            }
        } else {
            Rat::zero()
        }
    })
}

/// Oper data of the dual connection in the dual flag, read in the frame
/// [`dual_gauge`]; subdiagonal entries come out as `gamma_{r-i}`.
pub fn dual_oper(data: &OperLocalData) -> Result<OperLocalData> {
    let dual = crate::connection::dual_connection(&assemble(data));
    let g = LaurentMat::from_constant(&dual_gauge(data.rank()), 0);
    OperLocalData::from_matrix(gauge_transform(&dual, &g)?.matrix())
}

/// The induced connection on the `m`-th symmetric power of rank 2 data, in
/// the basis `e1^{m+1-i} e2^{i-1}`. Not normalized: the subdiagonal entries
/// are `(m+1-i) gamma`.
pub fn sym_power_oper(data: &OperLocalData, m: usize) -> Result<OperLocalData> {
    if data.rank() != 2 {
        return Err(Error::Shape(format!("symmetric power needs rank 2, got {}", data.rank())));
    }
    if m == 0 {
        return Err(Error::Shape("symmetric power exponent must be at least 1".into()));
    }
    let (a1, a2, g, al) = (&data.a[0], &data.a[1], &data.gamma[0], data.alpha(0, 1));
    let n = m + 1;
    let c = |x: usize| Rat::from_i64(x as i64);
    let a = (0..n).map(|i| &a1.scale(&c(m - i)) + &a2.scale(&c(i))).collect();
    let gamma = (0..m).map(|i| g.scale(&c(m - i))).collect();
    let mut alpha = BTreeMap::new();
    for j in 1..n {
        alpha.insert((j - 1, j), al.scale(&c(j)));
    }
    OperLocalData::new(a, gamma, alpha)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(src: &str) -> Laurent {
        Series::parse(src, 16).unwrap()
    }

    fn data(a: &[&str], gamma: &[&str], alpha: &[((usize, usize), &str)]) -> OperLocalData {
        OperLocalData::new(
            a.iter().map(|x| s(x)).collect(),
            gamma.iter().map(|x| s(x)).collect(),
            alpha.iter().map(|(k, v)| (*k, s(v))).collect(),
        )
        .unwrap()
    }

    #[test]
    fn assemble_examples() {
        let d = data(&["0", "0"], &["z"], &[((0, 1), "1")]);
        let m = assemble(&d);
        assert!(m.matrix().agrees_with(&LaurentMat::parse(&[&["0", "1"], &["z", "0"]], 16).unwrap()));
        assert!(m.is_holomorphic());
    }

    #[test]
    fn verify_examples() {
        let ok = data(&["0", "0"], &["z"], &[]);
        let rep = verify_branched_oper(&ok);
        assert!(rep.passed() && rep.strict);

        let double = verify_branched_oper(&data(&["0", "0"], &["z^2"], &[]));
        assert!(!double.passed());
        let w = double.failures().next().unwrap();
        assert_eq!(w.condition, 5);
        assert_eq!(w.witness.as_deref(), Some("gamma_1 vanishing order 2"));

        let trace = verify_branched_oper(&data(&["1", "0"], &["z"], &[]));
        let w = trace.failures().next().unwrap();
        assert_eq!((w.condition, w.witness.as_deref()), (3, Some("trace = 1")));
    }

    #[test]
    fn normalize_examples() {
        let d = data(&["0", "0"], &["2*z"], &[]);
        let (n, g) = normalize_oper(&d).unwrap();
        assert!(n.is_strict());
        assert!(g.u[1].agrees_with(&s("2")));
        assert!(n.a()[1].agrees_with(&s("0")));

        let d = data(&["0", "0"], &["z + z^2"], &[]);
        let (n, g) = normalize_oper(&d).unwrap();
        assert!(n.is_strict());
        let expected = s("1 + z").inv().unwrap();
        assert!(n.a()[1].agrees_with(&expected));
        assert!(g.trace_defect.agrees_with(&expected));

        assert_eq!(
            normalize_oper(&data(&["0", "0"], &["z^2"], &[])).unwrap_err(),
            Error::GammaNotSimpleZero { index: 1, valuation: 2 }
        );
    }

    #[test]
    fn oper_to_log_examples() {
        let c = oper_to_log(&OperLocalData::strict(2, BTreeMap::new(), 16).unwrap()).unwrap();
        assert!(c.conn().matrix().agrees_with(&LaurentMat::parse(&[&["0", "0"], &["1", "z^-1"]], 16).unwrap()));
        let c = oper_to_log(&OperLocalData::strict(3, BTreeMap::new(), 16).unwrap()).unwrap();
        let m = c.conn().matrix();
        assert_eq!(m.coeff_matrix(-1), RatMatrix::diagonal(&[Rat::zero(), Rat::one(), Rat::from_i64(2)]));
        assert!(m[(1, 0)].agrees_with(&s("1")) && m[(2, 1)].agrees_with(&s("1")));
    }

    #[test]
    fn phi_rank_two() {
        let phi = compute_phi(&OperLocalData::strict(2, BTreeMap::new(), 16).unwrap());
        assert!(phi.agrees_with(&LaurentMat::parse(&[&["0", "1"], &["-z", "0"]], 16).unwrap()));
        assert_eq!(phi.det().valuation(), Some(1));
        assert_eq!(phi_graded_orders(&phi), vec![Some(1), Some(0)]);
    }

    #[test]
    fn dual_examples() {
        let d = OperLocalData::strict(2, BTreeMap::new(), 16).unwrap();
        let dd = dual_oper(&d).unwrap();
        assert!(dd.is_strict() && verify_branched_oper(&dd).passed());
        let x = data(&["1 + z", "-1 - z", "0"], &["z", "3*z + z^2"], &[((0, 1), "z"), ((0, 2), "2")]);
        let y = dual_oper(&x).unwrap();
        assert!(y.gamma()[0].agrees_with(&x.gamma()[1]));
        assert!(dual_oper(&y).unwrap().agrees_with(&x));
    }

    #[test]
    fn sym_square() {
        let d = OperLocalData::strict(2, BTreeMap::new(), 16).unwrap();
        assert!(sym_power_oper(&d, 1).unwrap().agrees_with(&d));
        let s2 = sym_power_oper(&d, 2).unwrap();
        assert!(s2.gamma()[0].agrees_with(&s("2*z")) && s2.gamma()[1].agrees_with(&s("z")));
        assert!(verify_branched_oper(&s2).passed());
        let (n, _) = normalize_oper(&s2).unwrap();
        assert!(n.is_strict());
    }
}
