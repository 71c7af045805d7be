use branchop_core::connection::residue;
use branchop_core::global_p1::{
    localize, localize_oper, pullback_power_map, standard_sl2_oper, sym_power_global, GlobalConnection, Poly,
    RationalFn,
};
use branchop_core::log_side::roundtrip_check;
use branchop_core::oper::{oper_to_log, sym_power_oper, verify_branched_oper};
use branchop_core::{rat, Error};
use num_traits::Zero;
use proptest::prelude::*;

fn poly(cs: &[i64]) -> Poly {
    Poly::new(cs.iter().map(|&c| rat(c, 1)).collect())
}

fn same_connection(a: &GlobalConnection, b: &GlobalConnection) -> bool {
    a.rank == b.rank
        && (0..a.rank).all(|i| (0..a.rank).all(|j| a.entry(i, j) == b.entry(i, j)))
        && a.marked_points == b.marked_points
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn expansion_agrees_with_evaluation(
        num in prop::collection::vec(-5i64..=5, 1..5),
        den in prop::collection::vec(-5i64..=5, 1..4),
        p in -3i64..=3,
    ) {
        let den = poly(&den);
        prop_assume!(!den.is_zero());
        let p = rat(p, 1);
        prop_assume!(!den.eval(&p).is_zero());
        let f = RationalFn::new(poly(&num), den).unwrap();
        let s = f.expand_at(&p, 12).unwrap();
        prop_assert!(s.is_holomorphic());
        // Multiplying back by the denominator recovers the numerator.
        let back = &s * &f.denominator().taylor_shift(&p).to_series(12);
        prop_assert!(back.agrees_with(&f.numerator().taylor_shift(&p).to_series(12)));
    }

    #[test]
    fn pullbacks_compose(k in 1usize..4, l in 1usize..4) {
        let g = standard_sl2_oper();
        let twice = pullback_power_map(&pullback_power_map(&g, k).unwrap(), l).unwrap();
        let once = pullback_power_map(&g, k * l).unwrap();
        prop_assert!(same_connection(&twice, &once));
    }

    #[test]
    fn sym_power_commutes_with_pullback(k in 1usize..4, m in 1usize..4) {
        let g = standard_sl2_oper();
        let a = sym_power_global(&pullback_power_map(&g, k).unwrap(), m).unwrap();
        let b = pullback_power_map(&sym_power_global(&g, m).unwrap(), k).unwrap();
        prop_assert!(same_connection(&a, &b));
    }

    #[test]
    fn localization_away_from_branching_is_holomorphic(k in 1usize..4, p in 1i64..=4) {
        let g = pullback_power_map(&standard_sl2_oper(), k).unwrap();
        let local = localize(&g, &rat(p, 1), 16).unwrap();
        prop_assert!(local.is_holomorphic());
    }
}

#[test]
fn square_map_gives_simple_branching() {
    let g = pullback_power_map(&standard_sl2_oper(), 2).unwrap();
    assert_eq!(g.marked_points, vec![rat(0, 1)]);
    let data = localize_oper(&g, &rat(0, 1), 24).unwrap();
    let report = verify_branched_oper(&data);
    assert!(report.passed());
    assert_eq!(report.gamma_valuations, vec![Some(1)]);
    let spectrum = residue(oper_to_log(&data).unwrap().conn()).unwrap().spectrum;
    assert_eq!(spectrum, vec![0, 1]);
}

#[test]
fn cube_map_is_rejected() {
    let g = pullback_power_map(&standard_sl2_oper(), 3).unwrap();
    let data = localize_oper(&g, &rat(0, 1), 24).unwrap();
    let report = verify_branched_oper(&data);
    assert!(!report.passed());
    assert_eq!(report.gamma_valuations, vec![Some(2)]);
}

#[test]
fn symmetric_square_of_strict_oper() {
    let g = pullback_power_map(&standard_sl2_oper(), 2).unwrap();
    let data = localize_oper(&g, &rat(0, 1), 24).unwrap();
    let sym = sym_power_oper(&data, 2).unwrap();
    assert!(verify_branched_oper(&sym).passed());
    assert!(roundtrip_check(&sym).unwrap().holds);
    let global = localize_oper(&sym_power_global(&g, 2).unwrap(), &rat(0, 1), 24).unwrap();
    assert!(global.agrees_with(&sym));
}

#[test]
fn pole_off_the_marked_points_is_an_error() {
    let f = RationalFn::new(poly(&[1]), poly(&[-1, 1])).unwrap(); // 1/(z-1)
    let mut g = standard_sl2_oper();
    g.a[0][1] = f;
    assert!(matches!(localize(&g, &rat(1, 1), 8), Err(Error::PoleAtBasepoint { row: 1, col: 2 })));
    g.marked_points.push(rat(1, 1));
    assert!(localize(&g, &rat(1, 1), 8).unwrap().is_logarithmic());
}
