//! Rational connections on the affine chart of the projective line, and their
//! expansion at a point.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::connection::MeroConnection;
use crate::error::{Error, Result};
use crate::oper::OperLocalData;
use crate::scalar::Scalar;
use crate::series::Series;
use crate::{Laurent, LaurentMat, Rat};

/// Polynomial with ascending coefficients and no trailing zeros.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Poly(Vec<Rat>);

impl Poly {
    pub fn new(mut coeffs: Vec<Rat>) -> Self {
        while coeffs.last().is_some_and(Zero::is_zero) {
            coeffs.pop();
        }
        Poly(coeffs)
    }

    pub fn zero() -> Self {
        Poly(Vec::new())
    }

    pub fn constant(c: Rat) -> Self {
        Self::new(vec![c])
    }

    /// `c z^k`.
    pub fn monomial(c: Rat, k: usize) -> Self {
        let mut v = vec![Rat::zero(); k + 1];
        v[k] = c;
        Self::new(v)
    }

    pub fn coeffs(&self) -> &[Rat] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn degree(&self) -> Option<usize> {
        self.0.len().checked_sub(1)
    }

    pub fn leading(&self) -> Rat {
        self.0.last().cloned().unwrap_or_else(Rat::zero)
    }

    pub fn add(&self, o: &Self) -> Self {
        let n = self.0.len().max(o.0.len());
        Self::new(
            (0..n)
                .map(|i| {
                    self.0.get(i).cloned().unwrap_or_else(Rat::zero)
                        + o.0.get(i).cloned().unwrap_or_else(Rat::zero)
                })
                .collect(),
        )
    }

    pub fn neg(&self) -> Self {
        Poly(self.0.iter().map(|c| -c).collect())
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }

    pub fn mul(&self, o: &Self) -> Self {
        if self.is_zero() || o.is_zero() {
            return Self::zero();
        }
        let mut v = vec![Rat::zero(); self.0.len() + o.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in o.0.iter().enumerate() {
                v[i + j] += a * b;
            }
        }
        Self::new(v)
    }

    pub fn scale(&self, c: &Rat) -> Self {
        Self::new(self.0.iter().map(|x| x * c).collect())
    }

    /// Quotient and remainder; `d` must be nonzero.
    pub fn div_rem(&self, d: &Self) -> (Self, Self) {
        let dd = d.degree().expect("division by the zero polynomial");
        let lead = d.leading();
        let mut rem = self.clone();
        let mut q = vec![Rat::zero(); self.0.len().saturating_sub(dd).max(1)];
        while let Some(rd) = rem.degree() {
            if rd < dd {
                break;
            }
            let c = rem.leading() / &lead;
            q[rd - dd] = c.clone();
            rem = rem.sub(&d.mul(&Poly::monomial(c, rd - dd)));
        }
        (Self::new(q), rem)
    }

    pub fn monic(&self) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        self.scale(&(Rat::one() / self.leading()))
    }

    /// Monic greatest common divisor.
    pub fn gcd(&self, o: &Self) -> Self {
        let (mut a, mut b) = (self.clone(), o.clone());
        while !b.is_zero() {
            let r = a.div_rem(&b).1;
            a = b;
            b = r;
        }
        a.monic()
    }

    pub fn eval(&self, x: &Rat) -> Rat {
        self.0.iter().rev().fold(Rat::zero(), |acc, c| acc * x + c)
    }

    /// `p(z + s)`.
    pub fn taylor_shift(&self, s: &Rat) -> Self {
        let lin = Poly::new(vec![s.clone(), Rat::one()]);
        self.0
            .iter()
            .rev()
            .fold(Poly::zero(), |acc, c| acc.mul(&lin).add(&Poly::constant(c.clone())))
    }

    /// `p(z^k)`.
    pub fn substitute_power(&self, k: usize) -> Self {
        let mut v = vec![Rat::zero(); self.0.len().saturating_sub(1) * k + 1];
        for (i, c) in self.0.iter().enumerate() {
            v[i * k] = c.clone();
        }
        Self::new(v)
    }

    pub fn to_series(&self, prec: i64) -> Laurent {
        Series::from_poly(&self.0, prec)
    }
}

/// Reduced fraction with monic denominator.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RationalFn {
    num: Poly,
    den: Poly,
}

impl RationalFn {
    pub fn new(num: Poly, den: Poly) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::Singular);
        }
        if num.is_zero() {
            return Ok(Self::zero());
        }
        let g = num.gcd(&den);
        let (n, _) = num.div_rem(&g);
        let (d, _) = den.div_rem(&g);
        let lead = d.leading();
        Ok(RationalFn { num: n.scale(&(Rat::one() / &lead)), den: d.monic() })
    }

    pub fn zero() -> Self {
        RationalFn { num: Poly::zero(), den: Poly::constant(Rat::one()) }
    }

    pub fn poly(p: Poly) -> Self {
        RationalFn { num: p, den: Poly::constant(Rat::one()) }
    }

    pub fn constant(c: Rat) -> Self {
        Self::poly(Poly::constant(c))
    }

    pub fn numerator(&self) -> &Poly {
        &self.num
    }

    pub fn denominator(&self) -> &Poly {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn add(&self, o: &Self) -> Self {
        Self::new(self.num.mul(&o.den).add(&o.num.mul(&self.den)), self.den.mul(&o.den))
            .expect("nonzero denominator")
    }

    pub fn mul(&self, o: &Self) -> Self {
        Self::new(self.num.mul(&o.num), self.den.mul(&o.den)).expect("nonzero denominator")
    }

    pub fn scale(&self, c: &Rat) -> Self {
        Self::new(self.num.scale(c), self.den.clone()).expect("nonzero denominator")
    }

    pub fn substitute_power(&self, k: usize) -> Self {
        Self::new(self.num.substitute_power(k), self.den.substitute_power(k))
            .expect("nonzero denominator")
    }

    /// Order of the pole at `p` (0 if regular there).
    pub fn pole_order_at(&self, p: &Rat) -> usize {
        let shifted = self.den.taylor_shift(p);
        shifted.0.iter().take_while(|c| c.is_zero()).count()
    }

    /// Laurent expansion at `p` in the local coordinate `z - p`.
    pub fn expand_at(&self, p: &Rat, prec: i64) -> Result<Laurent> {
        let den = self.den.taylor_shift(p).to_series(crate::EXACT);
        let v = den.valuation().expect("nonzero denominator");
        let num = self.num.taylor_shift(p).to_series(prec + v);
        let inv = den.shift(-v).truncate(prec + v).inv()?;
        Ok((&num * &inv).shift(-v))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GlobalConnection {
    pub rank: usize,
    /// `A[i][j]`, the coefficient of `dz` in the affine chart.
    pub a: Vec<Vec<RationalFn>>,
    pub marked_points: Vec<Rat>,
}

impl GlobalConnection {
    pub fn entry(&self, i: usize, j: usize) -> &RationalFn {
        &self.a[i][j]
    }
}

/// The rank 2 connection `[[0, 0], [1, 0]]` on the trivial bundle, with the
/// first coordinate line as its line subbundle.
pub fn standard_sl2_oper() -> GlobalConnection {
    let z = RationalFn::zero();
    let one = RationalFn::constant(Rat::one());
    GlobalConnection { rank: 2, a: vec![vec![z.clone(), z.clone()], vec![one, z]], marked_points: vec![] }
}

fn rational_kth_root(p: &Rat, k: usize) -> Option<Rat> {
    let root = |n: &BigInt| -> Option<BigInt> {
        if n.is_negative() && k % 2 == 0 {
            return None;
        }
        let r = if n.is_negative() { -(-n).nth_root(k as u32) } else { n.nth_root(k as u32) };
        (num_traits::pow(r.clone(), k) == *n).then_some(r)
    };
    Some(Rat::new(root(p.numer())?, root(p.denom())?))
}

/// Pullback under `z -> z^k`: substitute and multiply by `k z^{k-1}`.
pub fn pullback_power_map(g: &GlobalConnection, k: usize) -> Result<GlobalConnection> {
    if k == 0 {
        return Err(Error::Shape("pullback exponent must be at least 1".into()));
    }
    let jac = RationalFn::poly(Poly::monomial(Rat::from_i64(k as i64), k - 1));
    let a = g
        .a
        .iter()
        .map(|row| row.iter().map(|f| f.substitute_power(k).mul(&jac)).collect())
        .collect();
    let mut marked: Vec<Rat> = g.marked_points.iter().filter_map(|p| rational_kth_root(p, k)).collect();
    if k >= 2 && !marked.contains(&Rat::zero()) {
        marked.push(Rat::zero());
    }
    marked.sort();
    Ok(GlobalConnection { rank: g.rank, a, marked_points: marked })
}

/// The induced connection on the `m`-th symmetric power of a rank 2
/// connection, in the basis `e1^{m+1-i} e2^{i-1}`.
pub fn sym_power_global(g: &GlobalConnection, m: usize) -> Result<GlobalConnection> {
    if g.rank != 2 || m == 0 {
        return Err(Error::Shape("symmetric power needs rank 2 and m >= 1".into()));
    }
    let (a1, al, gm, a2) = (&g.a[0][0], &g.a[0][1], &g.a[1][0], &g.a[1][1]);
    let n = m + 1;
    let c = |x: usize| Rat::from_i64(x as i64);
    let mut a = vec![vec![RationalFn::zero(); n]; n];
    for i in 0..n {
        a[i][i] = a1.scale(&c(m - i)).add(&a2.scale(&c(i)));
        if i + 1 < n {
            a[i + 1][i] = gm.scale(&c(m - i));
            a[i][i + 1] = al.scale(&c(i + 1));
        }
    }
    Ok(GlobalConnection { rank: n, a, marked_points: g.marked_points.clone() })
}

/// Expands every entry at `p` to precision `prec` in the coordinate `z - p`.
/// Marked points may carry simple poles; anywhere else entries must be
/// regular.
pub fn localize(g: &GlobalConnection, p: &Rat, prec: i64) -> Result<MeroConnection> {
    let allowed = if g.marked_points.contains(p) { 1 } else { 0 };
    let mut rows = Vec::with_capacity(g.rank);
    for (i, row) in g.a.iter().enumerate() {
        let mut out = Vec::with_capacity(g.rank);
        for (j, f) in row.iter().enumerate() {
            if f.pole_order_at(p) > allowed {
                return Err(Error::PoleAtBasepoint { row: i + 1, col: j + 1 });
            }
            out.push(f.expand_at(p, prec)?);
        }
        rows.push(out);
    }
    MeroConnection::new(LaurentMat::from_rows(rows))
}

/// [`localize`] followed by reading the result as oper data.
pub fn localize_oper(g: &GlobalConnection, p: &Rat, prec: i64) -> Result<OperLocalData> {
    let conn = localize(g, p, prec)?;
    OperLocalData::from_matrix(conn.matrix())
}
