//! Truncated formal Laurent series in one variable `z`.
//!
//! A series stores its nonzero coefficients together with an absolute
//! precision `N`: every coefficient of `z^k` with `k < N` is known exactly and
//! nothing is claimed about `k >= N`. Series that are known in full (monomials,
//! gauge matrices built from eigenvectors, ...) carry the [`EXACT`] sentinel.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Precision sentinel for series known in full.
pub const EXACT: i64 = i64::MAX / 8;

/// Working precision used when no other precision is available.
pub const DEFAULT_PRECISION: i64 = 24;

fn clamp(p: i64) -> i64 {
    if p >= EXACT / 2 {
        EXACT
    } else {
        p
    }
}

fn padd(a: i64, b: i64) -> i64 {
    clamp(a.saturating_add(b))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Series<T: Scalar> {
    coeffs: BTreeMap<i64, T>,
    prec: i64,
}

impl<T: Scalar> Series<T> {
    /// Builds a series from `(exponent, coefficient)` pairs, summing repeated
    /// exponents and discarding everything at or above `prec`.
    pub fn from_terms<I: IntoIterator<Item = (i64, T)>>(terms: I, prec: i64) -> Self {
        let prec = clamp(prec);
        let mut coeffs: BTreeMap<i64, T> = BTreeMap::new();
        for (k, c) in terms {
            if k >= prec {
                continue;
            }
            let e = coeffs.entry(k).or_insert_with(T::zero);
            *e = e.clone() + c;
        }
        coeffs.retain(|_, c| !c.is_zero());
        Series { coeffs, prec }
    }

    /// Polynomial `c_0 + c_1 z + ...` truncated at `prec`.
    pub fn from_poly(coeffs: &[T], prec: i64) -> Self {
        Self::from_terms(
            coeffs.iter().cloned().enumerate().map(|(k, c)| (k as i64, c)),
            prec,
        )
    }

    pub fn zero(prec: i64) -> Self {
        Series { coeffs: BTreeMap::new(), prec: clamp(prec) }
    }

    pub fn exact_zero() -> Self {
        Self::zero(EXACT)
    }

    pub fn constant(c: T, prec: i64) -> Self {
        Self::from_terms([(0, c)], prec)
    }

    pub fn one() -> Self {
        Self::monomial(T::one(), 0)
    }

    /// Exact monomial `c z^k`.
    pub fn monomial(c: T, k: i64) -> Self {
        Self::from_terms([(k, c)], EXACT)
    }

    /// Exact `z^k`.
    pub fn z_pow(k: i64) -> Self {
        Self::monomial(T::one(), k)
    }

    pub fn precision(&self) -> i64 {
        self.prec
    }

    pub fn is_exact(&self) -> bool {
        self.prec == EXACT
    }

    /// Lowest exponent with a nonzero coefficient; `None` for the zero series.
    pub fn valuation(&self) -> Option<i64> {
        self.coeffs.keys().next().copied()
    }

    /// Lower bound on the true valuation: the valuation if some coefficient is
    /// known to be nonzero, otherwise the precision.
    pub fn effective_valuation(&self) -> i64 {
        self.valuation().unwrap_or(self.prec)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeff(&self, k: i64) -> T {
        self.coeffs.get(&k).cloned().unwrap_or_else(T::zero)
    }

    pub fn terms(&self) -> impl Iterator<Item = (i64, &T)> {
        self.coeffs.iter().map(|(k, c)| (*k, c))
    }

    /// Highest exponent with a stored coefficient.
    pub fn degree(&self) -> Option<i64> {
        self.coeffs.keys().next_back().copied()
    }

    /// True when no negative exponent appears.
    pub fn is_holomorphic(&self) -> bool {
        self.valuation().map_or(true, |v| v >= 0)
    }

    /// Drops all coefficients at or above `prec` and lowers the precision.
    pub fn truncate(&self, prec: i64) -> Self {
        let prec = prec.min(self.prec);
        Series {
            coeffs: self.coeffs.range(..prec).map(|(k, c)| (*k, c.clone())).collect(),
            prec,
        }
    }

    /// Multiplication by the exact monomial `z^k`.
    pub fn shift(&self, k: i64) -> Self {
        Series {
            coeffs: self.coeffs.iter().map(|(e, c)| (e + k, c.clone())).collect(),
            prec: padd(self.prec, k),
        }
    }

    pub fn scale(&self, c: &T) -> Self {
        if c.is_zero() {
            return Self::zero(self.prec);
        }
        Series {
            coeffs: self.coeffs.iter().map(|(k, v)| (*k, v.clone() * c.clone())).collect(),
            prec: self.prec,
        }
    }

    /// Termwise derivative `d/dz`; precision drops by one.
    pub fn derivative(&self) -> Self {
        Self::from_terms(
            self.coeffs
                .iter()
                .filter(|(k, _)| **k != 0)
                .map(|(k, c)| (k - 1, c.clone() * T::from_i64(*k))),
            if self.is_exact() { EXACT } else { self.prec - 1 },
        )
    }

    /// Multiplicative inverse. The relative precision is preserved; an exact
    /// non-monomial input is expanded to [`DEFAULT_PRECISION`] terms.
    pub fn inv(&self) -> Result<Self> {
        let v = self.valuation().ok_or(Error::ZeroSeries)?;
        let lead = self.coeff(v);
        if self.coeffs.len() == 1 && self.is_exact() {
            return Ok(Self::monomial(T::one() / lead, -v));
        }
        let rel = if self.is_exact() { DEFAULT_PRECISION } else { self.prec - v };
        let inv_lead = T::one() / lead;
        let mut out: Vec<T> = Vec::with_capacity(rel as usize);
        for n in 0..rel {
            if n == 0 {
                out.push(inv_lead.clone());
                continue;
            }
            let mut acc = T::zero();
            for (k, a) in self.coeffs.range(v + 1..=v + n) {
                let i = (k - v) as usize;
                acc = acc + a.clone() * out[n as usize - i].clone();
            }
            out.push(-(acc * inv_lead.clone()));
        }
        Ok(Self::from_terms(
            out.into_iter().enumerate().map(|(i, c)| (i as i64 - v, c)),
            rel - v,
        ))
    }

    pub fn checked_div(&self, other: &Self) -> Result<Self> {
        Ok(self * &other.inv()?)
    }

    /// Coefficientwise agreement on every exponent below `end` (which must not
    /// exceed either precision for the comparison to be meaningful).
    pub fn agrees_below(&self, other: &Self, end: i64) -> bool {
        let a = self.coeffs.range(..end);
        let b = other.coeffs.range(..end);
        a.eq(b)
    }

    /// Equality on the overlap of the two guaranteed windows.
    pub fn agrees_with(&self, other: &Self) -> bool {
        self.agrees_below(other, self.prec.min(other.prec))
    }

    /// Polynomial part (exponents `>= 0`), keeping precision.
    pub fn holomorphic_part(&self) -> Self {
        Series {
            coeffs: self.coeffs.range(0..).map(|(k, c)| (*k, c.clone())).collect(),
            prec: self.prec,
        }
    }

    /// Part with exponents in `[lo, hi)`, returned as an exact Laurent
    /// polynomial. Caller guarantees `hi <= precision`.
    pub fn window(&self, lo: i64, hi: i64) -> Self {
        Series {
            coeffs: self.coeffs.range(lo..hi).map(|(k, c)| (*k, c.clone())).collect(),
            prec: EXACT,
        }
    }

    pub fn map_coeffs<U: Scalar>(&self, f: impl Fn(&T) -> U) -> Series<U> {
        Series::from_terms(self.coeffs.iter().map(|(k, c)| (*k, f(c))), self.prec)
    }

    /// Reads back coefficients as a dense vector for exponents `lo..hi`.
    pub fn dense(&self, lo: i64, hi: i64) -> Vec<T> {
        (lo..hi).map(|k| self.coeff(k)).collect()
    }

    /// Evaluates a polynomial (no negative exponents, exact or not) at `x`,
    /// summing only stored terms.
    pub fn eval_terms(&self, x: &T) -> T {
        let mut acc = T::zero();
        for (k, c) in &self.coeffs {
            let mut p = T::one();
            if *k >= 0 {
                for _ in 0..*k {
                    p = p * x.clone();
                }
            } else {
                for _ in 0..(-k) {
                    p = p / x.clone();
                }
            }
            acc = acc + c.clone() * p;
        }
        acc
    }

    /// Renders with the literal grammar accepted by [`Series::parse`];
    /// precision is not part of the literal.
    pub fn to_literal(&self) -> String {
        if self.coeffs.is_empty() {
            return "0".to_string();
        }
        let mut out = String::new();
        for (i, (k, c)) in self.coeffs.iter().enumerate() {
            let neg = c.is_negative_value();
            let mag = c.abs_value();
            if i == 0 {
                if neg {
                    out.push('-');
                }
            } else {
                out.push_str(if neg { " - " } else { " + " });
            }
            let unit = mag.is_one();
            match *k {
                0 => out.push_str(&mag.to_string()),
                k if k < 0 => {
                    out.push_str(&mag.to_string());
                    out.push_str("/z");
                    if k != -1 {
                        out.push('^');
                        out.push_str(&(-k).to_string());
                    }
                }
                _ => {
                    if !unit {
                        out.push_str(&mag.to_string());
                        out.push('*');
                    }
                    out.push('z');
                    if *k != 1 {
                        out.push('^');
                        out.push_str(&k.to_string());
                    }
                }
            }
        }
        out
    }

    /// Parses a literal such as `1/2 - 3*z^-1 + z^2` or `2/3/z^2`; the result carries
    /// precision `prec`.
    pub fn parse(src: &str, prec: i64) -> Result<Self> {
        literal::parse(src).map(|terms| Self::from_terms(terms, prec))
    }
}

impl<T: Scalar> fmt::Display for Series<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_literal())?;
        if !self.is_exact() {
            write!(f, " + O(z^{})", self.prec)?;
        }
        Ok(())
    }
}

impl<'a, T: Scalar> Add<&'a Series<T>> for &'a Series<T> {
    type Output = Series<T>;

    fn add(self, rhs: &Series<T>) -> Series<T> {
        let prec = self.prec.min(rhs.prec);
        Series::from_terms(
            self.coeffs
                .iter()
                .chain(rhs.coeffs.iter())
                .map(|(k, c)| (*k, c.clone())),
            prec,
        )
    }
}

impl<'a, T: Scalar> Sub<&'a Series<T>> for &'a Series<T> {
    type Output = Series<T>;

    fn sub(self, rhs: &Series<T>) -> Series<T> {
        self + &(-rhs)
    }
}

impl<T: Scalar> Neg for &Series<T> {
    type Output = Series<T>;

    fn neg(self) -> Series<T> {
        Series {
            coeffs: self.coeffs.iter().map(|(k, c)| (*k, -c.clone())).collect(),
            prec: self.prec,
        }
    }
}

impl<T: Scalar> Neg for Series<T> {
    type Output = Series<T>;

    fn neg(self) -> Series<T> {
        -&self
    }
}

impl<'a, T: Scalar> Mul<&'a Series<T>> for &'a Series<T> {
    type Output = Series<T>;

    fn mul(self, rhs: &Series<T>) -> Series<T> {
        let prec = padd(self.prec, rhs.effective_valuation())
            .min(padd(rhs.prec, self.effective_valuation()));
        let mut acc: BTreeMap<i64, T> = BTreeMap::new();
        for (i, a) in &self.coeffs {
            for (j, b) in &rhs.coeffs {
                let k = i + j;
                if k >= prec {
                    break;
                }
                let e = acc.entry(k).or_insert_with(T::zero);
                *e = e.clone() + a.clone() * b.clone();
            }
        }
        acc.retain(|_, c| !c.is_zero());
        Series { coeffs: acc, prec }
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl<T: Scalar> $tr<Series<T>> for Series<T> {
            type Output = Series<T>;
            fn $m(self, rhs: Series<T>) -> Series<T> {
                (&self).$m(&rhs)
            }
        }
        impl<'a, T: Scalar> $tr<&'a Series<T>> for Series<T> {
            type Output = Series<T>;
            fn $m(self, rhs: &'a Series<T>) -> Series<T> {
                (&self).$m(rhs)
            }
        }
    };
}

forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

mod literal {
    use super::*;

    struct Cursor<'a> {
        s: &'a [u8],
        pos: usize,
    }

    impl<'a> Cursor<'a> {
        fn peek(&self) -> Option<u8> {
            self.s.get(self.pos).copied()
        }

        fn eat(&mut self, c: u8) -> bool {
            if self.peek() == Some(c) {
                self.pos += 1;
                true
            } else {
                false
            }
        }

        fn digits(&mut self) -> Option<&'a str> {
            let start = self.pos;
            while matches!(self.peek(), Some(b'0'..=b'9')) {
                self.pos += 1;
            }
            (self.pos > start).then(|| std::str::from_utf8(&self.s[start..self.pos]).unwrap())
        }

        fn err(&self, msg: &str) -> Error {
            Error::Parse {
                column: self.pos + 1,
                message: msg.to_string(),
            }
        }
    }

    fn scalar_from_digits<T: Scalar>(d: &str) -> T {
        // Horner in base 10 so arbitrarily long literals stay exact.
        let ten = T::from_i64(10);
        d.bytes().fold(T::zero(), |acc, b| acc * ten.clone() + T::from_i64((b - b'0') as i64))
    }

    fn power(cur: &mut Cursor<'_>) -> Result<i64> {
        if !cur.eat(b'^') {
            return Ok(1);
        }
        let neg = cur.eat(b'-');
        let d = cur.digits().ok_or_else(|| cur.err("expected exponent"))?;
        let e = d.parse::<i64>().map_err(|_| cur.err("exponent out of range"))?;
        Ok(if neg { -e } else { e })
    }

    pub(super) fn parse<T: Scalar>(src: &str) -> Result<Vec<(i64, T)>> {
        let compact: Vec<u8> = src.bytes().filter(|b| !b.is_ascii_whitespace()).collect();
        let mut cur = Cursor { s: &compact, pos: 0 };
        if compact.is_empty() {
            return Err(cur.err("empty literal"));
        }
        let mut terms = Vec::new();
        let mut first = true;
        while cur.peek().is_some() {
            let mut negative = false;
            if cur.eat(b'-') {
                negative = true;
            } else if cur.eat(b'+') {
            } else if !first {
                return Err(cur.err("expected '+' or '-'"));
            }
            first = false;

            let mut coeff = T::one();
            let mut has_coeff = false;
            if let Some(d) = cur.digits() {
                has_coeff = true;
                coeff = scalar_from_digits(d);
                if cur.s.get(cur.pos..cur.pos + 2).is_some_and(|w| w[0] == b'/' && w[1] != b'z') {
                    cur.pos += 1;
                    let q = cur.digits().ok_or_else(|| cur.err("expected denominator"))?;
                    let q: T = scalar_from_digits(q);
                    if q.is_zero() {
                        return Err(cur.err("zero denominator"));
                    }
                    coeff = coeff / q;
                }
            }
            let mut exp = 0i64;
            let has_star = has_coeff && cur.eat(b'*');
            if cur.eat(b'z') {
                exp = power(&mut cur)?;
            } else if has_coeff && !has_star && cur.eat(b'/') {
                // `c/z^k`
                if !cur.eat(b'z') {
                    return Err(cur.err("expected 'z'"));
                }
                exp = -power(&mut cur)?;
            } else if has_star || !has_coeff {
                return Err(cur.err("expected 'z'"));
            }
            if negative {
                coeff = -coeff;
            }
            terms.push((exp, coeff));
        }
        Ok(terms)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rat;

    fn s(src: &str) -> Series<Rat> {
        Series::parse(src, 12).unwrap()
    }

    fn q(n: i64, d: i64) -> Rat {
        Rat::from_frac(n, d)
    }

    #[test]
    fn product_examples() {
        assert!((&s("1 + z") * &s("1 - z")).agrees_with(&s("1 - z^2")));
        let p = &Series::<Rat>::z_pow(-1) * &Series::z_pow(1);
        assert_eq!(p, Series::one());
        let p = &s("1/2 + z") * &s("2 + z");
        assert!(p.agrees_with(&s("1 + 5/2*z + z^2")));
        assert_eq!(p.precision(), 12);
    }

    #[test]
    fn product_precision_rule() {
        let a = Series::<Rat>::parse("z^-2 + 1", 5).unwrap();
        let b = Series::parse("z^3", 7).unwrap();
        // min(5 + 3, 7 - 2)
        assert_eq!((&a * &b).precision(), 5);
        assert_eq!((&a * &Series::zero(4)).precision(), 2);
    }

    #[test]
    fn inverse_examples() {
        assert_eq!(Series::<Rat>::one().inv().unwrap(), Series::one());
        assert_eq!(Series::<Rat>::z_pow(1).inv().unwrap(), Series::z_pow(-1));
        let g = s("1 - z").inv().unwrap();
        assert_eq!(g.precision(), 12);
        for k in 0..12 {
            assert_eq!(g.coeff(k), q(1, 1));
        }
        let w = Series::<Rat>::parse("2*z^-1 + 3", 6).unwrap();
        let wi = w.inv().unwrap();
        assert_eq!(wi.valuation(), Some(1));
        assert_eq!(wi.precision(), 8);
        assert!((&w * &wi).agrees_with(&Series::one()));
    }

    #[test]
    fn inverse_of_zero_fails() {
        assert!(matches!(Series::<Rat>::zero(10).inv(), Err(Error::ZeroSeries)));
        let t = Series::<Rat>::parse("z^12", 10).unwrap();
        assert!(t.is_zero());
        assert!(matches!(t.inv(), Err(Error::ZeroSeries)));
    }

    #[test]
    fn derivative_examples() {
        assert!(s("z^2").derivative().agrees_with(&s("2*z")));
        assert_eq!(Series::<Rat>::z_pow(-1).derivative(), Series::monomial(q(-1, 1), -2));
        let d = s("3 + z + 1/2*z^2").derivative();
        assert!(d.agrees_with(&s("1 + z")));
        assert_eq!(d.precision(), 11);
    }

    #[test]
    fn literal_roundtrip_and_errors() {
        let a = s("1/2 - 3*z^-1 + z^2");
        assert_eq!(a.to_literal(), "-3/z + 1/2 + z^2");
        assert_eq!(s("2/3*z^-2 - z^-1").to_literal(), "2/3/z^2 - 1/z");
        assert_eq!(s(&a.to_literal()), a);
        assert_eq!(s(" - z ").to_literal(), "-z");
        assert_eq!(s("0").to_literal(), "0");
        assert_eq!(s("2*z - 1/3*z").coeff(1), q(5, 3));
        assert_eq!(s("1/z"), s("z^-1"));
        assert_eq!(s("2/3/z^2"), s("2/3*z^-2"));
        assert_eq!(s("1 - 5/z").coeff(-1), q(-5, 1));
        for bad in ["", "1/0", "3*", "z^", "z z", "x", "1/2/3", "/z", "2/z^", "1*/z"] {
            assert!(Series::<Rat>::parse(bad, 5).is_err(), "{bad}");
        }
    }
}
