//! Hecke modification of a lattice along residue eigenspaces.

use std::collections::BTreeSet;

use num_traits::{One, Zero};

use crate::connection::{gauge_transform, residue, MeroConnection, ResidueData};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::series::Series;
use crate::{LaurentMat, Rat, RatMatrix};

/// A full-rank lattice given by a basis in the ambient frame.
#[derive(Clone, Debug, PartialEq)]
pub struct Lattice {
    pub basis: LaurentMat,
}

impl Lattice {
    /// Valuation of the basis determinant, the colength of the sublattice.
    pub fn colength(&self) -> Option<i64> {
        self.basis.det().valuation()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HeckeStep {
    pub kept_eigenvalues: BTreeSet<i64>,
    pub lattice: Lattice,
    pub conn_before: MeroConnection,
    pub conn_after: MeroConnection,
    pub residue_before: ResidueData,
    pub residue_after: ResidueData,
    /// Eigenvalue of each basis column: kept ones, then dropped ones (before
    /// the shift).
    pub column_eigenvalues: Vec<i64>,
    pub kept_count: usize,
}

impl HeckeStep {
    pub fn spectrum_before(&self) -> &[i64] {
        &self.residue_before.spectrum
    }

    pub fn spectrum_after(&self) -> &[i64] {
        &self.residue_after.spectrum
    }

    /// Kept eigenvalues unchanged, every dropped one raised by one.
    pub fn predicted_spectrum(&self) -> Vec<i64> {
        let mut out: Vec<i64> = self
            .spectrum_before()
            .iter()
            .map(|l| if self.kept_eigenvalues.contains(l) { *l } else { l + 1 })
            .collect();
        out.sort_unstable();
        out
    }

    pub fn shift_law_holds(&self) -> bool {
        self.predicted_spectrum() == self.spectrum_after()
    }

    /// The new frame vectors sitting over dropped eigenvectors (the kernel of
    /// the basis map at the point) are eigenvectors for the shifted eigenvalue.
    pub fn shifted_eigenlines_hold(&self) -> bool {
        let r = &self.residue_after.matrix;
        (self.kept_count..self.column_eigenvalues.len()).all(|j| {
            let lambda = Rat::from_i64(self.column_eigenvalues[j] + 1);
            let mut e = vec![Rat::zero(); r.rows()];
            e[j] = Rat::one();
            let image = r.mul_vec(&e);
            image.iter().zip(&e).all(|(a, b)| *a == b * &lambda)
        })
    }

    /// Kept eigenvalues that coincide with a shifted dropped one.
    pub fn collisions(&self) -> Vec<i64> {
        let dropped: BTreeSet<i64> =
            self.column_eigenvalues[self.kept_count..].iter().map(|l| l + 1).collect();
        self.kept_eigenvalues.intersection(&dropped).copied().collect()
    }

    /// The basis map at the point carries each kept eigenspace of the new
    /// residue isomorphically onto the old eigenspace for the same eigenvalue.
    ///
    /// At a collision the new residue may have a Jordan block whose
    /// eigenvector lies over a dropped direction, so there the generalized
    /// eigenspace is used: it must map onto the old eigenspace, with kernel
    /// the shifted directions.
    pub fn kept_eigenlines_hold(&self) -> bool {
        let phi0 = self.lattice.basis.coeff_matrix(0);
        let collisions = self.collisions();
        let n = self.residue_after.matrix.rows();
        self.kept_eigenvalues.iter().all(|&l| {
            let old_space = self.residue_before.eigenspace(l);
            let old = RatMatrix::from_columns(old_space);
            let new_space = if collisions.contains(&l) {
                let shifted = &self.residue_after.matrix - &RatMatrix::identity(n).scale(&Rat::from_i64(l));
                let mut pow = RatMatrix::identity(n);
                for _ in 0..n {
                    pow = &pow * &shifted;
                }
                pow.kernel()
            } else {
                let space = self.residue_after.eigenspace(l).to_vec();
                if space.len() != old_space.len() {
                    return false;
                }
                space
            };
            if new_space.is_empty() {
                return false;
            }
            let images: Vec<Vec<Rat>> = new_space.iter().map(|v| phi0.mul_vec(v)).collect();
            let img = RatMatrix::from_columns(&images);
            // Image contained in the old eigenspace and spanning it.
            img.rank() == old.rank() && old.hstack(&img).rank() == old.rank()
        })
    }

    pub fn colength_law_holds(&self) -> bool {
        let dropped = (self.column_eigenvalues.len() - self.kept_count) as i64;
        self.lattice.colength() == Some(dropped)
    }
}

/// Modifies the lattice so that directions with eigenvalues outside `kept`
/// are divided by `z`, and returns the induced logarithmic connection.
///
/// Basis columns are the kept eigenvectors in ascending eigenvalue order,
/// followed by `z` times the dropped eigenvectors, also ascending.
pub fn hecke_modify(conn: &MeroConnection, kept: &BTreeSet<i64>) -> Result<HeckeStep> {
    let res = residue(conn)?;
    if let Some(&bad) = kept.iter().find(|l| !res.eigenlines.contains_key(l)) {
        return Err(Error::NotAnEigenvalue(bad));
    }
    if let Some(l) = res.defective_eigenvalue() {
        return Err(Error::NonSemisimpleResidue { eigenvalue: l, step: None });
    }
    let mut columns = Vec::new();
    let mut column_eigenvalues = Vec::new();
    for (&l, vecs) in &res.eigenlines {
        if kept.contains(&l) {
            for v in vecs {
                columns.push(exact_column(v, 0));
                column_eigenvalues.push(l);
            }
        }
    }
    let kept_count = columns.len();
    for (&l, vecs) in &res.eigenlines {
        if !kept.contains(&l) {
            for v in vecs {
                columns.push(exact_column(v, 1));
                column_eigenvalues.push(l);
            }
        }
    }
    let basis = LaurentMat::from_columns(&columns);
    let conn_after = gauge_transform(conn, &basis)?;
    if !conn_after.is_logarithmic() {
        return Err(Error::PoleOrder { order: conn_after.pole_bound(), allowed: 1 });
    }
    let residue_after = residue(&conn_after)?;
    Ok(HeckeStep {
        kept_eigenvalues: kept.clone(),
        lattice: Lattice { basis },
        conn_before: conn.clone(),
        conn_after,
        residue_before: res,
        residue_after,
        column_eigenvalues,
        kept_count,
    })
}

fn exact_column(v: &[Rat], k: i64) -> Vec<Series<Rat>> {
    v.iter().map(|c| Series::monomial(c.clone(), k)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn conn(rows: &[&[&str]], prec: i64) -> MeroConnection {
        MeroConnection::new(LaurentMat::parse(rows, prec).unwrap()).unwrap()
    }

    #[test]
    fn diagonal_example() {
        let c = conn(&[&["0", "0"], &["0", "z^-1"]], 20);
        let step = hecke_modify(&c, &BTreeSet::from([0])).unwrap();
        assert_eq!(step.lattice.basis, LaurentMat::parse(&[&["1", "0"], &["0", "z"]], crate::EXACT).unwrap());
        assert_eq!(step.residue_after.matrix, RatMatrix::from_i64_rows(&[&[0, 0], &[0, 2]]));
        assert_eq!(step.spectrum_after(), &[0, 2]);
        assert!(step.shift_law_holds() && step.kept_eigenlines_hold() && step.shifted_eigenlines_hold());
        assert!(step.colength_law_holds());
    }

    #[test]
    fn keeping_everything_is_identity() {
        let c = conn(&[&["0", "0"], &["1", "z^-1"]], 20);
        let step = hecke_modify(&c, &BTreeSet::from([0, 1])).unwrap();
        assert_eq!(step.lattice.basis, LaurentMat::identity(2));
        assert!(step.conn_after.matrix().agrees_with(c.matrix()));
    }

    #[test]
    fn witness_gives_nilpotent_residue() {
        let c = conn(&[&["-z^-1", "z^-1"], &["1", "0"]], 20);
        let step = hecke_modify(&c, &BTreeSet::from([0])).unwrap();
        assert_eq!(
            step.lattice.basis,
            LaurentMat::parse(&[&["1", "z"], &["1", "0"]], crate::EXACT).unwrap()
        );
        assert_eq!(step.residue_after.matrix, RatMatrix::from_i64_rows(&[&[0, 0], &[-1, 0]]));
        assert!(step.shift_law_holds());
        assert_eq!(step.collisions(), vec![0]);
        assert!(step.kept_eigenlines_hold() && step.shifted_eigenlines_hold());
    }

    #[test]
    fn errors() {
        let c = conn(&[&["0", "0"], &["0", "z^-1"]], 20);
        assert_eq!(hecke_modify(&c, &BTreeSet::from([5])).unwrap_err(), Error::NotAnEigenvalue(5));
        let jordan = conn(&[&["0", "z^-1"], &["0", "0"]], 20);
        assert_eq!(
            hecke_modify(&jordan, &BTreeSet::from([0])).unwrap_err(),
            Error::NonSemisimpleResidue { eigenvalue: 0, step: None }
        );
    }
}
