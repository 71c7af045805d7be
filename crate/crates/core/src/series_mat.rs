//! Dense matrices with truncated Laurent series entries.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;
use crate::series::{Series, EXACT};

#[derive(Clone, Debug, PartialEq)]
pub struct SeriesMat<T: Scalar> {
    rows: usize,
    cols: usize,
    entries: Vec<Series<T>>,
}

impl<T: Scalar> SeriesMat<T> {
    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> Series<T>) -> Self {
        let mut entries = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                entries.push(f(i, j));
            }
        }
        SeriesMat { rows, cols, entries }
    }

    pub fn from_rows(rows: Vec<Vec<Series<T>>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        SeriesMat { rows: r, cols: c, entries: rows.into_iter().flatten().collect() }
    }

    /// Parses a grid of series literals, all at precision `prec`.
    pub fn parse(rows: &[&[&str]], prec: i64) -> Result<Self> {
        let parsed = rows
            .iter()
            .map(|r| r.iter().map(|s| Series::parse(s, prec)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_rows(parsed))
    }

    pub fn zeros(rows: usize, cols: usize, prec: i64) -> Self {
        Self::from_fn(rows, cols, |_, _| Series::zero(prec))
    }

    /// Exact identity.
    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { Series::one() } else { Series::exact_zero() })
    }

    pub fn diagonal(diag: &[Series<T>]) -> Self {
        let n = diag.len();
        Self::from_fn(n, n, |i, j| if i == j { diag[i].clone() } else { Series::exact_zero() })
    }

    /// The exact matrix `m * z^k`.
    pub fn from_constant(m: &Matrix<T>, k: i64) -> Self {
        Self::from_fn(m.rows(), m.cols(), |i, j| Series::monomial(m[(i, j)].clone(), k))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn entries(&self) -> impl Iterator<Item = &Series<T>> {
        self.entries.iter()
    }

    /// The common precision floor: the minimum over all entries.
    pub fn precision(&self) -> i64 {
        self.entries.iter().map(Series::precision).min().unwrap_or(EXACT)
    }

    /// Smallest valuation among nonzero entries.
    pub fn valuation(&self) -> Option<i64> {
        self.entries.iter().filter_map(Series::valuation).min()
    }

    /// Order of the worst pole (0 when every entry is holomorphic).
    pub fn pole_order(&self) -> i64 {
        self.valuation().map_or(0, |v| (-v).max(0))
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(Series::is_zero)
    }

    pub fn is_holomorphic(&self) -> bool {
        self.entries.iter().all(Series::is_holomorphic)
    }

    /// Matrix of coefficients of `z^k`.
    pub fn coeff_matrix(&self, k: i64) -> Matrix<T> {
        Matrix::from_fn(self.rows, self.cols, |i, j| self[(i, j)].coeff(k))
    }

    pub fn map(&self, f: impl Fn(&Series<T>) -> Series<T>) -> Self {
        SeriesMat { rows: self.rows, cols: self.cols, entries: self.entries.iter().map(f).collect() }
    }

    pub fn truncate(&self, prec: i64) -> Self {
        self.map(|s| s.truncate(prec))
    }

    pub fn shift(&self, k: i64) -> Self {
        self.map(|s| s.shift(k))
    }

    pub fn scale(&self, c: &T) -> Self {
        self.map(|s| s.scale(c))
    }

    pub fn scale_series(&self, c: &Series<T>) -> Self {
        self.map(|s| s * c)
    }

    pub fn derivative(&self) -> Self {
        self.map(Series::derivative)
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].clone())
    }

    pub fn trace(&self) -> Series<T> {
        (0..self.rows.min(self.cols)).fold(Series::exact_zero(), |acc, i| &acc + &self[(i, i)])
    }

    pub fn column(&self, j: usize) -> Vec<Series<T>> {
        (0..self.rows).map(|i| self[(i, j)].clone()).collect()
    }

    pub fn from_columns(cols: &[Vec<Series<T>>]) -> Self {
        let c = cols.len();
        let r = cols.first().map_or(0, Vec::len);
        Self::from_fn(r, c, |i, j| cols[j][i].clone())
    }

    pub fn mul_vec(&self, v: &[Series<T>]) -> Vec<Series<T>> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|i| {
                (0..self.cols).fold(Series::exact_zero(), |acc, j| &acc + &(&self[(i, j)] * &v[j]))
            })
            .collect()
    }

    /// Entrywise agreement on exponents below `end`.
    pub fn agrees_below(&self, other: &Self, end: i64) -> bool {
        self.rows == other.rows
            && self.cols == other.cols
            && self.entries.iter().zip(&other.entries).all(|(a, b)| a.agrees_below(b, end))
    }

    /// Entrywise agreement on the overlap of guaranteed windows.
    pub fn agrees_with(&self, other: &Self) -> bool {
        self.rows == other.rows
            && self.cols == other.cols
            && self.entries.iter().zip(&other.entries).all(|(a, b)| a.agrees_with(b))
    }

    pub fn is_lower_hessenberg_zero(&self) -> bool {
        (0..self.rows).all(|i| (0..self.cols).all(|j| i <= j + 1 || self[(i, j)].is_zero()))
    }

    pub fn is_upper_triangular(&self) -> bool {
        (0..self.rows).all(|i| (0..i.min(self.cols)).all(|j| self[(i, j)].is_zero()))
    }

    fn minor(&self, skip_row: usize, skip_col: usize) -> Self {
        Self::from_fn(self.rows - 1, self.cols - 1, |i, j| {
            let ii = if i < skip_row { i } else { i + 1 };
            let jj = if j < skip_col { j } else { j + 1 };
            self[(ii, jj)].clone()
        })
    }

    /// Determinant by cofactor expansion along the first row. Ranks in this
    /// crate are small, and the expansion keeps the precision bookkeeping of
    /// plain products and sums.
    pub fn det(&self) -> Series<T> {
        assert!(self.is_square(), "determinant of a non-square matrix");
        match self.rows {
            0 => Series::one(),
            1 => self[(0, 0)].clone(),
            2 => &(&self[(0, 0)] * &self[(1, 1)]) - &(&self[(0, 1)] * &self[(1, 0)]),
            n => {
                let mut acc = Series::exact_zero();
                for j in 0..n {
                    if self[(0, j)].is_zero() && self[(0, j)].is_exact() {
                        continue;
                    }
                    let term = &self[(0, j)] * &self.minor(0, j).det();
                    acc = if j % 2 == 0 { &acc + &term } else { &acc - &term };
                }
                acc
            }
        }
    }

    /// Cofactor matrix transposed.
    pub fn adjugate(&self) -> Self {
        assert!(self.is_square());
        let n = self.rows;
        if n == 1 {
            return Self::identity(1);
        }
        Self::from_fn(n, n, |i, j| {
            let c = self.minor(j, i).det();
            if (i + j) % 2 == 0 {
                c
            } else {
                -c
            }
        })
    }

    /// Inverse over the Laurent field, via the adjugate.
    pub fn inverse(&self) -> Result<Self> {
        if !self.is_square() {
            return Err(Error::Dimension("inverse of a non-square matrix".into()));
        }
        let d = self.det();
        let dinv = d.inv().map_err(|_| Error::Singular)?;
        Ok(self.adjugate().scale_series(&dinv))
    }

    /// Column Hermite form over the power series ring: an upper triangular
    /// basis of the lattice spanned by the columns, with diagonal entries
    /// `z^{m_i}` and every entry above the diagonal in row `i` reduced to
    /// exponents below `m_i`. Two bases span the same lattice exactly when
    /// their Hermite forms agree.
    pub fn column_hermite_form(&self) -> Result<Self> {
        if !self.is_square() {
            return Err(Error::Dimension("hermite form of a non-square matrix".into()));
        }
        let n = self.rows;
        let mut m = self.clone();
        for i in (0..n).rev() {
            let pivot = (0..=i)
                .filter(|&k| !m[(i, k)].is_zero())
                .min_by_key(|&k| m[(i, k)].valuation())
                .ok_or(Error::Singular)?;
            m.swap_cols(pivot, i);
            let inv = m[(i, i)].inv()?;
            for k in 0..i {
                if m[(i, k)].is_zero() {
                    continue;
                }
                let q = &m[(i, k)] * &inv;
                for row in 0..=i {
                    let v = &m[(row, k)] - &(&q * &m[(row, i)]);
                    m[(row, k)] = v;
                }
                m[(i, k)] = Series::exact_zero();
            }
            let v = m[(i, i)].valuation().expect("pivot is nonzero");
            let unit = inv.shift(v);
            for row in 0..i {
                let x = &m[(row, i)] * &unit;
                m[(row, i)] = x;
            }
            m[(i, i)] = Series::z_pow(v);
        }
        for j in 1..n {
            for i in (0..j).rev() {
                let mi = m[(i, i)].valuation().expect("diagonal is a monomial");
                let q = m[(i, j)].shift(-mi).holomorphic_part();
                if q.is_zero() {
                    continue;
                }
                for row in 0..=i {
                    let v = &m[(row, j)] - &(&q * &m[(row, i)]);
                    m[(row, j)] = v;
                }
            }
        }
        Ok(m)
    }

    pub fn swap_cols(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for i in 0..self.rows {
            self.entries.swap(i * self.cols + a, i * self.cols + b);
        }
    }

    /// Literal strings of every entry, row by row.
    pub fn to_literals(&self) -> Vec<Vec<String>> {
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self[(i, j)].to_literal()).collect())
            .collect()
    }
}

impl<T: Scalar> Index<(usize, usize)> for SeriesMat<T> {
    type Output = Series<T>;

    fn index(&self, (i, j): (usize, usize)) -> &Series<T> {
        &self.entries[i * self.cols + j]
    }
}

impl<T: Scalar> IndexMut<(usize, usize)> for SeriesMat<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Series<T> {
        &mut self.entries[i * self.cols + j]
    }
}

impl<'a, T: Scalar> Mul<&'a SeriesMat<T>> for &'a SeriesMat<T> {
    type Output = SeriesMat<T>;

    fn mul(self, rhs: &SeriesMat<T>) -> SeriesMat<T> {
        assert_eq!(self.cols, rhs.rows, "dimension mismatch in product");
        SeriesMat::from_fn(self.rows, rhs.cols, |i, j| {
            let mut acc = Series::exact_zero();
            for k in 0..self.cols {
                let (a, b) = (&self[(i, k)], &rhs[(k, j)]);
                if (a.is_zero() && a.is_exact()) || (b.is_zero() && b.is_exact()) {
                    continue;
                }
                acc = &acc + &(a * b);
            }
            acc
        })
    }
}

impl<'a, T: Scalar> Add<&'a SeriesMat<T>> for &'a SeriesMat<T> {
    type Output = SeriesMat<T>;

    fn add(self, rhs: &SeriesMat<T>) -> SeriesMat<T> {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        SeriesMat::from_fn(self.rows, self.cols, |i, j| &self[(i, j)] + &rhs[(i, j)])
    }
}

impl<'a, T: Scalar> Sub<&'a SeriesMat<T>> for &'a SeriesMat<T> {
    type Output = SeriesMat<T>;

    fn sub(self, rhs: &SeriesMat<T>) -> SeriesMat<T> {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        SeriesMat::from_fn(self.rows, self.cols, |i, j| &self[(i, j)] - &rhs[(i, j)])
    }
}

impl<T: Scalar> Neg for &SeriesMat<T> {
    type Output = SeriesMat<T>;

    fn neg(self) -> SeriesMat<T> {
        self.map(|s| -s)
    }
}

impl<T: Scalar> fmt::Display for SeriesMat<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for i in 0..self.rows {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "[")?;
            for j in 0..self.cols {
                if j > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{}", self[(i, j)].to_literal())?;
            }
            write!(f, "]")?;
        }
        write!(f, "]")
    }
}
