//! Meromorphic connections `d + A(z) dz` on the trivial bundle over the formal
//! disk, acting on column vectors.

use std::collections::BTreeMap;

use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;
use crate::series::{Series, EXACT};
use crate::{Laurent, LaurentMat, Rat, RatMatrix};

#[derive(Clone, Debug, PartialEq)]
pub struct MeroConnection {
    a: LaurentMat,
    pole_bound: i64,
}

impl MeroConnection {
    pub fn new(a: LaurentMat) -> Result<Self> {
        if !a.is_square() || a.rows() == 0 {
            return Err(Error::Dimension(format!(
                "connection matrix must be square and nonempty, got {}x{}",
                a.rows(),
                a.cols()
            )));
        }
        let pole_bound = a.pole_order();
        Ok(MeroConnection { a, pole_bound })
    }

    /// Zero connection `d` of rank `r`.
    pub fn trivial(r: usize) -> Self {
        Self::new(LaurentMat::zeros(r, r, EXACT)).unwrap()
    }

    pub fn rank(&self) -> usize {
        self.a.rows()
    }

    pub fn matrix(&self) -> &LaurentMat {
        &self.a
    }

    pub fn pole_bound(&self) -> i64 {
        self.pole_bound
    }

    pub fn is_logarithmic(&self) -> bool {
        self.pole_bound <= 1
    }

    pub fn is_holomorphic(&self) -> bool {
        self.pole_bound == 0
    }

    pub fn precision(&self) -> i64 {
        self.a.precision()
    }

    fn require_logarithmic(&self) -> Result<()> {
        if self.is_logarithmic() {
            Ok(())
        } else {
            Err(Error::PoleOrder { order: self.pole_bound, allowed: 1 })
        }
    }
}

/// The residue endomorphism together with its integer spectrum.
#[derive(Clone, Debug, PartialEq)]
pub struct ResidueData {
    pub matrix: RatMatrix,
    /// Eigenvalues with algebraic multiplicity, ascending.
    pub spectrum: Vec<i64>,
    /// Canonical kernel basis of `R - λ` for every distinct eigenvalue.
    pub eigenlines: BTreeMap<i64, Vec<Vec<Rat>>>,
}

impl ResidueData {
    pub fn multiplicity(&self, lambda: i64) -> usize {
        self.spectrum.iter().filter(|&&l| l == lambda).count()
    }

    pub fn distinct(&self) -> Vec<i64> {
        self.eigenlines.keys().copied().collect()
    }

    pub fn eigenspace(&self, lambda: i64) -> &[Vec<Rat>] {
        self.eigenlines.get(&lambda).map_or(&[], Vec::as_slice)
    }

    /// First eigenvalue whose geometric multiplicity is short of the
    /// algebraic one.
    pub fn defective_eigenvalue(&self) -> Option<i64> {
        self.eigenlines
            .iter()
            .find(|(l, v)| v.len() != self.multiplicity(**l))
            .map(|(l, _)| *l)
    }

    pub fn is_semisimple(&self) -> bool {
        self.defective_eigenvalue().is_none()
    }

    pub fn spread(&self) -> i64 {
        match (self.spectrum.first(), self.spectrum.last()) {
            (Some(lo), Some(hi)) => hi - lo,
            _ => 0,
        }
    }
}

/// Integer roots of a monic rational polynomial `[c_0, ..., c_{n-1}, 1]`, with
/// multiplicity, plus the leftover factor once they are divided out.
fn integer_roots(poly: &[Rat]) -> (Vec<i64>, Vec<Rat>) {
    let mut p = poly.to_vec();
    let mut roots = Vec::new();
    // Zero roots first, then scan inside the Cauchy bound.
    while p.len() > 1 && p[0].is_zero() {
        p.remove(0);
        roots.push(0);
    }
    if p.len() > 1 {
        let bound = p[..p.len() - 1]
            .iter()
            .map(|c| c.abs().ceil().to_integer())
            .max()
            .unwrap_or_default();
        let bound: i64 = num_traits::ToPrimitive::to_i64(&bound).unwrap_or(i64::MAX / 4) + 1;
        let mut x = -bound;
        while x <= bound && p.len() > 1 {
            if x != 0 {
                let xr = Rat::from_i64(x);
                while p.len() > 1 {
                    let (q, rem) = synthetic_division(&p, &xr);
                    if !rem.is_zero() {
                        break;
                    }
                    p = q;
                    roots.push(x);
                }
            }
            x += 1;
        }
    }
    roots.sort_unstable();
    (roots, p)
}

fn synthetic_division(p: &[Rat], x: &Rat) -> (Vec<Rat>, Rat) {
    let n = p.len() - 1;
    let mut q = vec![Rat::zero(); n];
    let mut acc = Rat::zero();
    for k in (0..=n).rev() {
        acc = acc * x + &p[k];
        if k > 0 {
            q[k - 1] = acc.clone();
        }
    }
    (q, acc)
}

fn poly_literal(p: &[Rat]) -> String {
    let s = Series::from_terms(p.iter().cloned().enumerate().map(|(k, c)| (k as i64, c)), EXACT);
    s.to_literal().replace('z', "x")
}

/// Residue (coefficient of `z^-1`) with its integer spectrum and eigenlines.
pub fn residue(conn: &MeroConnection) -> Result<ResidueData> {
    conn.require_logarithmic()?;
    residue_of_matrix(conn.a.coeff_matrix(-1))
}

pub(crate) fn residue_of_matrix(r: RatMatrix) -> Result<ResidueData> {
    let (spectrum, rest) = integer_roots(&r.charpoly());
    if rest.len() > 1 {
        return Err(Error::NonIntegralSpectrum { factor: poly_literal(&rest) });
    }
    let mut eigenlines = BTreeMap::new();
    for &l in &spectrum {
        eigenlines.entry(l).or_insert_with(|| {
            (&r - &RatMatrix::identity(r.rows()).scale(&Rat::from_i64(l))).kernel()
        });
    }
    Ok(ResidueData { matrix: r, spectrum, eigenlines })
}

/// `A' = g^-1 A g + g^-1 g'`, so that `s = g t` carries flat sections of the
/// result to flat sections of `conn`.
pub fn gauge_transform(conn: &MeroConnection, g: &LaurentMat) -> Result<MeroConnection> {
    if g.rows() != conn.rank() || !g.is_square() {
        return Err(Error::Dimension(format!(
            "gauge of size {}x{} for a rank {} connection",
            g.rows(),
            g.cols(),
            conn.rank()
        )));
    }
    let ginv = g.inverse().map_err(|_| Error::SingularGauge)?;
    let a = &(&ginv * &(&conn.a * g)) + &(&ginv * &g.derivative());
    MeroConnection::new(a)
}

/// Tensor with `O(k x)`: `A - (k/z) I`.
pub fn twist_by_point_power(conn: &MeroConnection, k: i64) -> MeroConnection {
    let shift = LaurentMat::from_constant(&RatMatrix::identity(conn.rank()), -1).scale(&Rat::from_i64(k));
    MeroConnection::new(&conn.a - &shift).unwrap()
}

/// The dual connection `-A^T`.
pub fn dual_connection(conn: &MeroConnection) -> MeroConnection {
    MeroConnection::new(-&conn.a.transpose()).unwrap()
}

/// The induced connection on the determinant line, `tr A`.
pub fn trace_connection(conn: &MeroConnection) -> MeroConnection {
    MeroConnection::new(LaurentMat::from_rows(vec![vec![conn.a.trace()]])).unwrap()
}

/// Single-valued formal solutions of `s' + A s = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct FlatBasis {
    pub dim: usize,
    pub sections: Vec<Vec<Laurent>>,
    /// Exponents at which the recursion imposed a nontrivial solvability
    /// condition.
    pub resonance_report: Vec<i64>,
    /// Exponents below this bound are exact in every section.
    pub precision: i64,
}

impl FlatBasis {
    /// Checks `s' + A s = 0` on the guaranteed window of each section.
    pub fn verify(&self, conn: &MeroConnection) -> bool {
        self.sections.iter().all(|s| {
            let rhs = conn.a.mul_vec(s);
            s.iter().zip(&rhs).all(|(si, ri)| {
                let e = &si.derivative() + ri;
                e.is_zero()
            })
        })
    }
}

/// Exact single-valued flat sections, by the resonance-aware coefficient
/// recursion `(k + R) s_k = -sum_m B_m s_{k-1-m}` where `A = R/z + sum B_m z^m`.
///
/// Coefficients are tracked as linear functions of parameters introduced at
/// resonant exponents; solvability conditions accumulate as linear constraints
/// and the solution space is their common kernel.
pub fn flat_sections(conn: &MeroConnection) -> Result<FlatBasis> {
    let res = residue(conn)?;
    let r = conn.rank();
    let prec = conn.precision();
    let spread = res.spread();
    let available = prec.saturating_add(1);
    if available < spread + 8 {
        return Err(Error::PrecisionExhausted { needed: spread + 8, available });
    }
    // An exact connection is expanded far enough to pass every resonance.
    let window = if conn.a.precision() >= EXACT / 2 {
        spread + crate::series::DEFAULT_PRECISION
    } else {
        available
    };
    let k0 = -res.spectrum.last().copied().unwrap_or(0);
    let k_end = k0 + window - 1;

    let b: Vec<RatMatrix> = (0..window).map(|m| conn.a.coeff_matrix(m)).collect();
    let resonant: Vec<i64> = res.spectrum.iter().map(|l| -l).collect();

    let mut nparams = 0usize;
    let mut coeffs: Vec<RatMatrix> = Vec::new(); // coeffs[i] is s_{k0+i}, r x nparams
    let mut constraints: Vec<Vec<Rat>> = Vec::new();
    let mut report = Vec::new();

    for k in k0..=k_end {
        let mut rhs = RatMatrix::zeros(r, nparams);
        for (i, s_prev) in coeffs.iter().enumerate() {
            // s_prev = s_{k0+i}; needs B_m with m = k - 1 - (k0 + i).
            let m = k - 1 - (k0 + i as i64);
            if m < 0 || m as usize >= b.len() || b[m as usize].is_zero() {
                continue;
            }
            rhs = &rhs - &(&b[m as usize] * s_prev);
        }
        let mut lhs = res.matrix.clone();
        for i in 0..r {
            lhs[(i, i)] = lhs[(i, i)].clone() + Rat::from_i64(k);
        }
        let next = if resonant.contains(&k) {
            let left = lhs.left_kernel();
            let mut obstructed = false;
            for y in &left {
                let row = Matrix::from_rows(vec![y.clone()]);
                let c = (&row * &rhs).row(0);
                if c.iter().any(|x| !x.is_zero()) {
                    obstructed = true;
                    constraints.push(c);
                }
            }
            if obstructed {
                report.push(k);
            }
            let projected = project_to_column_space(&rhs, &left);
            let particular = lhs.solve(&projected).expect("projected right-hand side is consistent");
            let kernel = lhs.kernel();
            let fresh = kernel.len();
            nparams += fresh;
            for c in constraints.iter_mut() {
                c.extend(std::iter::repeat(Rat::zero()).take(fresh));
            }
            for s in coeffs.iter_mut() {
                *s = s.hstack(&RatMatrix::zeros(r, fresh));
            }
            particular.hstack(&RatMatrix::from_columns(&kernel))
        } else {
            lhs.solve(&rhs).expect("non-resonant step is invertible")
        };
        coeffs.push(next);
    }

    let solutions = if constraints.is_empty() {
        RatMatrix::identity(nparams).to_rows()
    } else {
        Matrix::from_rows(constraints).kernel()
    };
    let sec_prec = k_end + 1;
    let sections = solutions
        .iter()
        .map(|p| {
            (0..r)
                .map(|row| {
                    Series::from_terms(
                        coeffs.iter().enumerate().map(|(i, s)| {
                            let c = (0..nparams).fold(Rat::zero(), |acc, j| acc + &s[(row, j)] * &p[j]);
                            (k0 + i as i64, c)
                        }),
                        sec_prec,
                    )
                })
                .collect()
        })
        .collect::<Vec<Vec<Laurent>>>();
    Ok(FlatBasis { dim: sections.len(), sections, resonance_report: report, precision: sec_prec })
}

/// `v - Y^T (Y Y^T)^-1 Y v`, columnwise: a projection onto the column space of
/// a matrix whose left kernel has basis `Y`.
fn project_to_column_space(v: &RatMatrix, left: &[Vec<Rat>]) -> RatMatrix {
    if left.is_empty() {
        return v.clone();
    }
    let y = Matrix::from_rows(left.to_vec());
    let yt = y.transpose();
    let gram = &y * &yt;
    let corr = &yt * &(&gram.inverse().expect("Gram matrix of independent rows") * &(&y * v));
    v - &corr
}

/// True iff the local monodromy is trivial, decided by the dimension of the
/// space of single-valued flat sections.
pub fn monodromy_trivial(conn: &MeroConnection) -> Result<bool> {
    Ok(flat_sections(conn)?.dim == conn.rank())
}

/// Evaluates a matrix of holomorphic series at `z = 0`.
pub fn value_at_zero(m: &LaurentMat) -> RatMatrix {
    m.coeff_matrix(0)
}
