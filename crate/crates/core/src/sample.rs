//! Random generators for property tests and the acceptance suite.

use std::collections::BTreeMap;

use num_traits::Zero;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::connection::{gauge_transform, MeroConnection};
use crate::log_side::LogOperCandidate;
use crate::oper::{oper_to_log, OperLocalData};
use crate::scalar::Scalar;
use crate::series::{Series, EXACT};
use crate::{Laurent, LaurentMat, Rat};

/// A rational `p/q` with `|p/q| <= 3` and height `max(|p|, q) <= 8`.
pub fn small_rat<R: Rng>(rng: &mut R) -> Rat {
    let q: i64 = rng.gen_range(1..=8);
    let bound = (3 * q).min(8);
    Rat::from_frac(rng.gen_range(-bound..=bound), q)
}

/// A sparse polynomial of degree below `max_degree` with small coefficients,
/// known to precision `prec`.
pub fn small_poly<R: Rng>(rng: &mut R, max_degree: usize, prec: i64) -> Laurent {
    let mut terms = Vec::new();
    for k in 0..max_degree {
        if rng.gen_bool(0.5) {
            terms.push((k as i64, small_rat(rng)));
        }
    }
    Series::from_terms(terms, prec)
}

/// Strict oper data of rank `r`: `gamma_i = z`, a random traceless diagonal
/// and random holomorphic upper entries.
pub fn strict_oper<R: Rng>(rng: &mut R, r: usize, prec: i64) -> OperLocalData {
    let mut a: Vec<Laurent> = (0..r - 1).map(|_| small_poly(rng, 3, prec)).collect();
    let sum = a.iter().fold(Series::zero(prec), |acc, s| &acc + s);
    a.push(-sum);
    let mut alpha = BTreeMap::new();
    for i in 0..r {
        for j in i + 1..r {
            alpha.insert((i, j), small_poly(rng, 3, prec));
        }
    }
    let z = Series::from_terms([(1, Rat::from_i64(1))], prec);
    OperLocalData::new(a, vec![z; r - 1], alpha).expect("valid shape")
}

/// An exact holomorphic upper unipotent matrix with polynomial entries.
pub fn upper_unipotent<R: Rng>(rng: &mut R, r: usize) -> LaurentMat {
    let mut m = LaurentMat::identity(r);
    for i in 0..r {
        for j in i + 1..r {
            m[(i, j)] = small_poly(rng, 3, EXACT);
        }
    }
    m
}

fn lower_unipotent<R: Rng>(rng: &mut R, r: usize) -> LaurentMat {
    upper_unipotent(rng, r).transpose()
}

/// A logarithmic connection with semisimple integer residue: a diagonal
/// residue plus a random holomorphic part, gauged by a random unimodular
/// polynomial matrix.
pub fn semisimple_log<R: Rng>(rng: &mut R, r: usize, prec: i64) -> MeroConnection {
    let mut a = LaurentMat::zeros(r, r, prec);
    for i in 0..r {
        for j in 0..r {
            let hol = small_poly(rng, 2, prec);
            a[(i, j)] = if i == j {
                &Series::monomial(Rat::from_i64(rng.gen_range(-3..=3)), -1) + &hol
            } else {
                hol
            };
        }
    }
    let conn = MeroConnection::new(a).expect("square");
    let u = &upper_unipotent(rng, r) * &lower_unipotent(rng, r);
    gauge_transform(&conn, &u).expect("unimodular gauge")
}

/// A random subset of the distinct eigenvalues in `spectrum`.
pub fn kept_subset<R: Rng>(rng: &mut R, spectrum: &[i64]) -> std::collections::BTreeSet<i64> {
    let mut distinct: Vec<i64> = spectrum.to_vec();
    distinct.dedup();
    distinct.shuffle(rng);
    let n = rng.gen_range(0..=distinct.len());
    distinct.into_iter().take(n).collect()
}

/// How a candidate was produced.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CandidateKind {
    /// An oper image gauged by a holomorphic upper unipotent matrix.
    Gauged,
    /// Strictly upper residue terms added.
    PolePerturbed,
    /// Constant strictly upper terms added.
    ConstantPerturbed,
}

/// A candidate obtained from a valid oper image by a residue-compatible
/// perturbation, so that every logarithmic-side condition still holds.
pub fn perturbed_candidate<R: Rng>(rng: &mut R, r: usize, prec: i64) -> (LogOperCandidate, CandidateKind) {
    let base = oper_to_log(&strict_oper(rng, r, prec)).expect("valid oper");
    let kind = *[CandidateKind::Gauged, CandidateKind::PolePerturbed, CandidateKind::ConstantPerturbed]
        .choose(rng)
        .unwrap();
    let perturb = |rng: &mut R, k: i64| {
        let mut m = base.conn().matrix().clone();
        let i = rng.gen_range(0..r - 1);
        let j = rng.gen_range(i + 1..r);
        let c = loop {
            let c = small_rat(rng);
            if !c.is_zero() {
                break c;
            }
        };
        m[(i, j)] = &m[(i, j)] + &Series::monomial(c, k);
        m
    };
    let m = match kind {
        CandidateKind::Gauged => base.conn().matrix().clone(),
        CandidateKind::PolePerturbed => perturb(rng, -1),
        CandidateKind::ConstantPerturbed => perturb(rng, 0),
    };
    let conn = MeroConnection::new(m).expect("square");
    let g = upper_unipotent(rng, r);
    let conn = gauge_transform(&conn, &g).expect("unimodular gauge");
    (LogOperCandidate::new(conn).expect("logarithmic"), kind)
}

/// `[[0, c/z], [1, 1/z]]`.
pub fn closed_form_candidate(c: &Rat, prec: i64) -> LogOperCandidate {
    let m = LaurentMat::from_rows(vec![
        vec![Series::zero(prec), Series::from_terms([(-1, c.clone())], prec)],
        vec![Series::from_terms([(0, Rat::from_i64(1))], prec), Series::from_terms([(-1, Rat::from_i64(1))], prec)],
    ]);
    LogOperCandidate::from_matrix(m).expect("logarithmic")
}

/// Random holomorphic lift corrections, one vector per level.
pub fn lift_corrections<R: Rng>(rng: &mut R, r: usize) -> Vec<Vec<Laurent>> {
    (0..r - 1).map(|_| (0..r).map(|_| small_poly(rng, 3, EXACT)).collect()).collect()
}

/// Unbranched data: `gamma_i` random units.
pub fn unbranched_oper<R: Rng>(rng: &mut R, r: usize, prec: i64) -> OperLocalData {
    let strict = strict_oper(rng, r, prec);
    let gamma = (0..r - 1)
        .map(|_| {
            let c = loop {
                let c = small_rat(rng);
                if !c.is_zero() {
                    break c;
                }
            };
            &Series::from_terms([(0, c)], prec) + &small_poly(rng, 2, prec).shift(1)
        })
        .collect();
    OperLocalData::new(strict.a().to_vec(), gamma, strict.alpha_entries().clone()).expect("valid shape")
}
