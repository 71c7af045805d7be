use branchop_core::{rat, Laurent, LaurentMat, Rat, RatMatrix, Series};
use num_traits::{One, Zero};
use proptest::prelude::*;

fn small_rat() -> impl Strategy<Value = Rat> {
    (-6i64..=6, 1i64..=4).prop_map(|(p, q)| rat(p, q))
}

// A series with valuation in [lo, lo+4) and precision `prec`.
fn series(lo: i64, prec: i64) -> impl Strategy<Value = Laurent> {
    prop::collection::vec(small_rat(), 0..6).prop_map(move |cs| {
        Series::from_terms(cs.into_iter().enumerate().map(|(k, c)| (lo + k as i64, c)), prec)
    })
}

fn unit(prec: i64) -> impl Strategy<Value = Laurent> {
    (small_rat().prop_filter("nonzero", |c| !c.is_zero()), series(1, prec))
        .prop_map(move |(c, s)| &Series::constant(c, prec) + &s)
}

fn mat2(prec: i64) -> impl Strategy<Value = LaurentMat> {
    prop::collection::vec(series(0, prec), 4)
        .prop_map(|v| LaurentMat::from_rows(vec![v[0..2].to_vec(), v[2..4].to_vec()]))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ring_laws(a in series(-2, 10), b in series(0, 12), c in series(1, 9)) {
        prop_assert!((&a + &b).agrees_with(&(&b + &a)));
        prop_assert!((&a * &b).agrees_with(&(&b * &a)));
        prop_assert!((&(&a * &b) * &c).agrees_with(&(&a * &(&b * &c))));
        prop_assert!((&a * &(&b + &c)).agrees_with(&(&(&a * &b) + &(&a * &c))));
        prop_assert!((&a - &a).is_zero());
    }

    #[test]
    fn product_precision_is_min_rule(a in series(-1, 8), b in series(2, 11)) {
        let p = &a * &b;
        let expect = (a.precision() + b.effective_valuation()).min(b.precision() + a.effective_valuation());
        prop_assert_eq!(p.precision(), expect);
    }

    #[test]
    fn inverse_is_two_sided(u in unit(14), k in -3i64..3) {
        let u = u.shift(k);
        let v = u.inv().unwrap();
        prop_assert_eq!(v.precision() - v.valuation().unwrap(), u.precision() - u.valuation().unwrap());
        prop_assert!((&u * &v).agrees_with(&Series::one()));
    }

    #[test]
    fn derivative_is_a_derivation(a in series(-2, 10), b in series(0, 10)) {
        let lhs = (&a * &b).derivative();
        let rhs = &(&a.derivative() * &b) + &(&a * &b.derivative());
        prop_assert!(lhs.agrees_with(&rhs));
    }

    #[test]
    fn literal_roundtrip(a in series(-3, 12)) {
        let back = Series::parse(&a.to_literal(), a.precision()).unwrap();
        prop_assert_eq!(back, a);
    }

    #[test]
    fn matrix_inverse_and_det(m in mat2(12), d in unit(12)) {
        // Make the determinant a unit by adding a unit diagonal.
        let m = &m.shift(1) + &LaurentMat::diagonal(&[d.clone(), Series::one()]);
        let inv = m.inverse().unwrap();
        prop_assert!((&m * &inv).agrees_with(&LaurentMat::identity(2)));
        let prod = &m * &inv;
        prop_assert!(prod.det().agrees_with(&Series::one()));
        prop_assert!((&m * &m).det().agrees_with(&(&m.det() * &m.det())));
    }

    #[test]
    fn hermite_form_spans_same_lattice(m in mat2(16)) {
        let g = &m.shift(1) + &LaurentMat::diagonal(&[Series::z_pow(1), Series::z_pow(2)]);
        let h = g.column_hermite_form().unwrap();
        prop_assert!(h.is_upper_triangular());
        // The transition matrix g^-1 h must be holomorphic with unit determinant.
        let t = &g.inverse().unwrap() * &h;
        prop_assert!(t.is_holomorphic());
        prop_assert_eq!(t.det().valuation(), Some(0));
    }
}

#[test]
fn rational_matrix_identities() {
    let m = RatMatrix::from_i64_rows(&[&[2, 1, 0], &[1, 3, 1], &[0, 1, 4]]);
    let inv = m.inverse().unwrap();
    assert_eq!(&m * &inv, RatMatrix::identity(3));
    assert_eq!(m.det(), rat(18, 1));
    // Cayley-Hamilton from the characteristic polynomial coefficients.
    let cp = m.charpoly();
    let mut acc = RatMatrix::zeros(3, 3);
    let mut pow = RatMatrix::identity(3);
    for c in &cp {
        acc = &acc + &pow.scale(c);
        pow = &pow * &m;
    }
    assert!(acc.is_zero());
    assert_eq!(cp.last().unwrap(), &Rat::one());
}
