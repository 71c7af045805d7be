use branchop_core::connection::{
    dual_connection, flat_sections, gauge_transform, monodromy_trivial, residue, trace_connection,
    twist_by_point_power,
};
use branchop_core::sample::{semisimple_log, small_poly, upper_unipotent};
use branchop_core::{Laurent, LaurentMat, MeroConnection, Rat, Series, EXACT};
use num_traits::Zero;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const N: i64 = 24;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn holomorphic(rng: &mut ChaCha8Rng, r: usize) -> MeroConnection {
    let mut a = LaurentMat::zeros(r, r, N);
    for i in 0..r {
        for j in 0..r {
            a[(i, j)] = small_poly(rng, 3, N);
        }
    }
    MeroConnection::new(a).unwrap()
}

// Fundamental solution with Y(0) = I of Y' = -A Y, coefficient by
// coefficient: (k+1) Y_{k+1} = -sum_m A_m Y_{k-m}.
fn taylor_fundamental(conn: &MeroConnection, terms: usize) -> Vec<Vec<Vec<Rat>>> {
    let r = conn.rank();
    let a: Vec<_> = (0..terms as i64).map(|k| conn.matrix().coeff_matrix(k)).collect();
    let mut y = vec![vec![vec![Rat::zero(); r]; r]; terms];
    for i in 0..r {
        y[0][i][i] = Rat::from_integer(1.into());
    }
    for k in 0..terms - 1 {
        for i in 0..r {
            for j in 0..r {
                let mut acc = Rat::zero();
                for m in 0..=k {
                    for l in 0..r {
                        acc += a[m][(i, l)].clone() * y[k - m][l][j].clone();
                    }
                }
                y[k + 1][i][j] = -acc / Rat::from_integer((k as i64 + 1).into());
            }
        }
    }
    y
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn gauge_composes(seed in any::<u64>(), r in 2usize..4) {
        let mut rng = rng(seed);
        let conn = semisimple_log(&mut rng, r, N);
        let g = upper_unipotent(&mut rng, r);
        let h = upper_unipotent(&mut rng, r).transpose();
        let two_step = gauge_transform(&gauge_transform(&conn, &g).unwrap(), &h).unwrap();
        let one_step = gauge_transform(&conn, &(&g * &h)).unwrap();
        prop_assert!(two_step.matrix().agrees_with(one_step.matrix()));
    }

    #[test]
    fn twist_shifts_residue(seed in any::<u64>(), r in 2usize..4, k in -3i64..4) {
        let conn = semisimple_log(&mut rng(seed), r, N);
        let before = residue(&conn).unwrap().spectrum;
        let after = residue(&twist_by_point_power(&conn, k)).unwrap().spectrum;
        let shifted: Vec<i64> = before.iter().map(|l| l - k).collect();
        prop_assert_eq!(after, shifted);
    }

    #[test]
    fn trace_tracks_log_derivative_of_det(seed in any::<u64>(), r in 2usize..4) {
        let mut rng = rng(seed);
        let conn = semisimple_log(&mut rng, r, N);
        let mut g = upper_unipotent(&mut rng, r);
        let d = &Series::constant(Rat::from_integer(2.into()), EXACT) + &small_poly(&mut rng, 3, EXACT).shift(1);
        g[(0, 0)] = d;
        let gauged = gauge_transform(&conn, &g).unwrap();
        let det = g.det();
        let dlog = &det.derivative() * &det.inv().unwrap();
        let expect = &trace_connection(&conn).matrix()[(0, 0)] + &dlog;
        prop_assert!(trace_connection(&gauged).matrix()[(0, 0)].agrees_with(&expect));
    }

    #[test]
    fn dual_pairing_is_constant(seed in any::<u64>(), r in 2usize..4) {
        let conn = holomorphic(&mut rng(seed), r);
        let flat = flat_sections(&conn).unwrap();
        let dual = flat_sections(&dual_connection(&conn)).unwrap();
        prop_assert_eq!(flat.dim, r);
        prop_assert_eq!(dual.dim, r);
        for s in &flat.sections {
            for t in &dual.sections {
                let pairing = s.iter().zip(t).fold(Series::exact_zero(), |acc: Laurent, (a, b)| &acc + &(a * b));
                prop_assert!(pairing.derivative().is_zero());
            }
        }
    }

    #[test]
    fn flat_sections_match_taylor_oracle(seed in any::<u64>(), r in 2usize..4) {
        let conn = holomorphic(&mut rng(seed), r);
        let flat = flat_sections(&conn).unwrap();
        prop_assert!(flat.verify(&conn));
        let y = taylor_fundamental(&conn, 12);
        // Each section is Y s(0).
        for s in &flat.sections {
            let s0: Vec<Rat> = s.iter().map(|c| c.coeff(0)).collect();
            for (k, yk) in y.iter().enumerate() {
                for i in 0..r {
                    let want: Rat = (0..r).map(|j| yk[i][j].clone() * s0[j].clone()).sum();
                    prop_assert_eq!(s[i].coeff(k as i64), want);
                }
            }
        }
    }

    #[test]
    fn monodromy_verdict_is_gauge_invariant(seed in any::<u64>(), r in 2usize..4) {
        let mut rng = rng(seed);
        let conn = semisimple_log(&mut rng, r, N);
        let u = &upper_unipotent(&mut rng, r) * &upper_unipotent(&mut rng, r).transpose();
        let gauged = gauge_transform(&conn, &u).unwrap();
        prop_assert_eq!(monodromy_trivial(&conn).unwrap(), monodromy_trivial(&gauged).unwrap());
    }
}

#[test]
fn resonant_examples() {
    let parse = |rows: &[&[&str]]| MeroConnection::new(LaurentMat::parse(rows, N).unwrap()).unwrap();
    let two = flat_sections(&parse(&[&["0", "0"], &["1", "1/z"]])).unwrap();
    assert_eq!(two.dim, 2);
    let one = flat_sections(&parse(&[&["0", "1/z"], &["1", "1/z"]])).unwrap();
    assert_eq!(one.dim, 1);
    assert_eq!(one.resonance_report, vec![0]);
    assert!(one.verify(&parse(&[&["0", "1/z"], &["1", "1/z"]])));
}
