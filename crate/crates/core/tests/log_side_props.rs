use branchop_core::connection::monodromy_trivial;
use branchop_core::log_side::{
    chain_trivializes, hecke_chain, log_to_oper, obstruction_vector, obstruction_vector_with, roundtrip_check,
    verify_log_conditions, LogOperCandidate,
};
use branchop_core::oper::{oper_to_log, verify_branched_oper};
use branchop_core::sample::{closed_form_candidate, lift_corrections, perturbed_candidate, strict_oper};
use branchop_core::{rat, Error, LaurentMat};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const N: i64 = 24;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// diag(0, 1, ..., r-1)/z with unit subdiagonal, plus `extra` at `(i, j)`.
fn base_with(r: usize, extra: (usize, usize, &str)) -> LogOperCandidate {
    let cells: Vec<Vec<String>> = (0..r)
        .map(|i| {
            (0..r)
                .map(|j| {
                    if (i, j) == (extra.0, extra.1) {
                        extra.2.to_string()
                    } else if i == j && i > 0 {
                        format!("{i}/z")
                    } else if i == j + 1 {
                        "1".into()
                    } else {
                        "0".into()
                    }
                })
                .collect()
        })
        .collect();
    let rows: Vec<Vec<&str>> = cells.iter().map(|r| r.iter().map(String::as_str).collect()).collect();
    let rows: Vec<&[&str]> = rows.iter().map(Vec::as_slice).collect();
    LogOperCandidate::from_matrix(LaurentMat::parse(&rows, N).unwrap()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn obstruction_ignores_the_lift(seed in any::<u64>(), r in 2usize..6) {
        let mut rng = rng(seed);
        let (cand, _) = perturbed_candidate(&mut rng, r, N);
        let base = obstruction_vector(&cand).unwrap();
        for _ in 0..5 {
            let lift = lift_corrections(&mut rng, r);
            prop_assert_eq!(&obstruction_vector_with(&cand, &lift).unwrap(), &base);
        }
    }

    #[test]
    fn chain_and_flat_sections_agree(seed in any::<u64>(), r in 2usize..6) {
        let (cand, _) = perturbed_candidate(&mut rng(seed), r, N);
        prop_assert!(verify_log_conditions(&cand, true).passed());
        prop_assert_eq!(chain_trivializes(&cand).unwrap(), monodromy_trivial(cand.conn()).unwrap());
    }

    #[test]
    fn trivial_monodromy_forces_vanishing_obstruction(seed in any::<u64>(), r in 2usize..6) {
        let (cand, _) = perturbed_candidate(&mut rng(seed), r, N);
        if monodromy_trivial(cand.conn()).unwrap() {
            prop_assert!(obstruction_vector(&cand).unwrap().vanishes());
        }
    }

    #[test]
    fn rank_two_obstruction_is_exact(seed in any::<u64>()) {
        let (cand, _) = perturbed_candidate(&mut rng(seed), 2, N);
        prop_assert_eq!(obstruction_vector(&cand).unwrap().vanishes(), monodromy_trivial(cand.conn()).unwrap());
    }

    #[test]
    fn oper_images_round_trip(seed in any::<u64>(), r in 2usize..6) {
        let data = strict_oper(&mut rng(seed), r, N);
        let cand = oper_to_log(&data).unwrap();
        prop_assert!(obstruction_vector(&cand).unwrap().vanishes());
        let trace = hecke_chain(&cand).unwrap();
        prop_assert!(trace.spectra_follow_pattern());
        prop_assert!(trace.final_residue_vanishes());
        let rt = roundtrip_check(&data).unwrap();
        prop_assert!(rt.holds);
        prop_assert!(rt.window >= N - r as i64);
        prop_assert!(verify_branched_oper(&rt.recovered).passed());
    }
}

#[test]
fn closed_form_family() {
    for c in -4..=4 {
        let cand = closed_form_candidate(&rat(c, 1), N);
        let m = obstruction_vector(&cand).unwrap();
        assert_eq!(m.values, vec![rat(-c * c, 1)]);
        assert_eq!(chain_trivializes(&cand).unwrap(), c == 0);
        assert_eq!(monodromy_trivial(cand.conn()).unwrap(), c == 0);
    }
}

#[test]
fn obstructed_candidate_is_refused() {
    let cand = closed_form_candidate(&rat(1, 1), N);
    match log_to_oper(&cand) {
        Err(Error::Obstructed { obstruction, final_residue }) => {
            assert_eq!(obstruction, vec![rat(-1, 1)]);
            assert!(!final_residue.is_zero());
        }
        other => panic!("expected an obstruction, got {other:?}"),
    }
}

// The obstruction scalars only see the adjacent resonances (i, i+1) at order
// z^0. Deeper resonances, (0, 2) at order z^1 or (0, 3) at order z^2, can
// survive while every M_j vanishes.
#[test]
fn deeper_resonances_are_invisible_to_obstruction_scalars() {
    for cand in [base_with(3, (0, 2, "z")), base_with(4, (0, 3, "1/z")), base_with(4, (0, 3, "1"))] {
        assert!(verify_log_conditions(&cand, true).passed());
        assert!(obstruction_vector(&cand).unwrap().vanishes());
        assert!(!chain_trivializes(&cand).unwrap());
        assert!(!monodromy_trivial(cand.conn()).unwrap());
    }
    // A constant at (0, 2) is removable.
    let removable = base_with(3, (0, 2, "1"));
    assert!(obstruction_vector(&removable).unwrap().vanishes());
    assert!(monodromy_trivial(removable.conn()).unwrap());
    // Pole terms one step off the diagonal of the eigenbasis are seen.
    let seen = base_with(3, (0, 2, "1/z"));
    assert_eq!(obstruction_vector(&seen).unwrap().values, vec![rat(-1, 2), rat(1, 2)]);
    assert!(!monodromy_trivial(seen.conn()).unwrap());
}
