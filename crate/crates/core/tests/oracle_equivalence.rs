mod common;

use clusterxy::geometry::{fidelity, pair_excitation_overlap};
use clusterxy::oracle::*;
use clusterxy::quench::{loschmidt_echo, QuenchProtocol};
use clusterxy::spectrum::free_fermion_ground_energy;
use clusterxy::{momentum_grid, Flags};
use common::{gapped_point, max_abs_diff, pt, sector};
use nalgebra::DVector;
use num_complex::Complex64;
use proptest::prelude::*;

fn times() -> Vec<f64> {
    (0..=200).map(|i| i as f64 * 0.05).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn fidelity_matches_ed(n in prop::sample::select(vec![4usize, 6, 8]), q in 0i64..2,
                           p1 in gapped_point(0.1), p2 in gapped_point(0.1)) {
        let ed = exact_overlap(n, &p1, &p2, sector(q)).unwrap();
        let cf = fidelity(&p1, &p2, &momentum_grid(n, sector(q)).unwrap());
        prop_assume!(!(ed.flags | cf.flags).contains(Flags::DEGENERATE));
        prop_assert!((ed.value - cf.value).abs() <= 1e-10, "ED {} closed form {}", ed.value, cf.value);
    }

    #[test]
    fn echo_matches_ed(n in prop::sample::select(vec![4usize, 6, 8]), q in 0i64..2,
                       p1 in gapped_point(0.1), p2 in gapped_point(0.1)) {
        let protocol = QuenchProtocol::new(p1, p2, momentum_grid(n, sector(q)).unwrap());
        let ed = exact_loschmidt(&protocol, &times()).unwrap();
        let cf = loschmidt_echo(&protocol, &times()).unwrap();
        prop_assume!(!(ed.flags | cf.flags).contains(Flags::DEGENERATE));
        prop_assert!(max_abs_diff(&ed.values, &cf.values) <= 1e-8);
    }

    #[test]
    fn pair_overlap_matches_ed(q in 0i64..2, p_c in gapped_point(0.1), p in gapped_point(0.1)) {
        let ed = exact_pair_overlap(8, &p_c, &p, sector(q)).unwrap();
        let cf = pair_excitation_overlap(&p_c, &p, &momentum_grid(8, sector(q)).unwrap());
        prop_assume!(!(ed.flags | cf.flags).intersects(Flags::DEGENERATE | Flags::UNRESOLVED));
        prop_assert!((ed.value - cf.value).abs() <= 1e-8, "ED {} closed form {}", ed.value, cf.value);
        let f = fidelity(&p_c, &p, &momentum_grid(8, sector(q)).unwrap()).value;
        prop_assert!(ed.value <= 1.0 - f * f + 1e-10);
    }

    #[test]
    fn energy_offset_is_point_independent(n in prop::sample::select(vec![4usize, 6, 8]), q in 0i64..2,
                                          reference in gapped_point(0.1), p in gapped_point(0.1)) {
        let offset = energy_offset(n, sector(q), &reference).unwrap();
        let ed = sector_ground_state(&build_hamiltonian(n, &p).unwrap(), sector(q));
        let ff = free_fermion_ground_energy(&momentum_grid(n, sector(q)).unwrap(), &p);
        prop_assume!(!(offset.flags | ed.flags | ff.flags).contains(Flags::DEGENERATE));
        prop_assert!((ff.value + offset.value - ed.energy).abs() <= 1e-9);
    }

    #[test]
    fn bcs_state_is_the_sector_ground_state(n in prop::sample::select(vec![4usize, 6, 8]), q in 0i64..2,
                                            p in gapped_point(0.1)) {
        let grid = momentum_grid(n, sector(q)).unwrap();
        let ed = sector_ground_state(&build_hamiltonian(n, &p).unwrap(), sector(q));
        prop_assume!(!ed.flags.contains(Flags::DEGENERATE));
        let v = bcs_state_vector(&grid, &p).unwrap();
        let ov: Complex64 = v.iter().zip(ed.state.iter()).map(|(a, &b)| a.conj() * b).sum();
        prop_assert!(ov.norm() >= 1.0 - 1e-10, "overlap {}", ov.norm());
    }

    #[test]
    fn eigenpairs_have_small_residuals(q in 0i64..2, p in gapped_point(0.0)) {
        let h = build_hamiltonian(8, &p).unwrap();
        let eig = sector_eigen(&h, sector(q));
        for (j, &e) in eig.values.iter().enumerate().step_by(7) {
            let v = eig.embed(&eig.vectors.column(j).into_owned(), 8);
            let r: DVector<f64> = &h.matrix * &v - &v * e;
            prop_assert!(r.norm() <= 1e-10);
        }
    }
}

#[test]
fn echo_of_identical_hamiltonians_is_one() {
    let p = pt(0.4, -0.3, 0.2);
    let protocol = QuenchProtocol::new(p, p, momentum_grid(6, sector(0)).unwrap());
    let ed = exact_loschmidt(&protocol, &times()).unwrap();
    assert!(ed.values.iter().all(|v| (v - 1.0).abs() < 1e-12));
    assert!(ed.flags.contains(Flags::TRIVIAL));
}

#[test]
fn overlap_is_symmetric_and_normalized() {
    let (a, b) = (pt(0.3, 1.2, -0.4), pt(-0.6, 0.1, 0.9));
    let ab = exact_overlap(6, &a, &b, sector(1)).unwrap().value;
    let ba = exact_overlap(6, &b, &a, sector(1)).unwrap().value;
    assert!((ab - ba).abs() < 1e-14);
    assert!((exact_overlap(6, &a, &a, sector(1)).unwrap().value - 1.0).abs() < 1e-12);
}

#[test]
fn sector_energies_bracket_the_ground_energy() {
    let h = build_hamiltonian(6, &pt(0.7, -0.2, 0.3)).unwrap();
    let even = sector_ground_state(&h, sector(0)).energy;
    let odd = sector_ground_state(&h, sector(1)).energy;
    let all = nalgebra::SymmetricEigen::new(h.matrix.clone()).eigenvalues.min();
    assert!((even.min(odd) - all).abs() < 1e-10);
}

#[test]
fn pair_overlap_vanishes_for_identical_points() {
    let p = pt(0.5, 0.8, -0.3);
    assert!(exact_pair_overlap(8, &p, &p, sector(0)).unwrap().value < 1e-20);
}

#[test]
fn oracle_report_serializes() {
    let r = oracle_suite(6, sector(0), &pt(0.2, 0.4, 0.6), &pt(-0.5, 0.1, 0.3)).unwrap();
    assert!(r.passed());
    let json = r.to_json();
    let back: OracleReport = serde_json::from_str(&json).unwrap();
    assert_eq!(back, r);
}
