mod common;

use proptest::prelude::*;
use spinthermo::spinspace::{
    couplings_from_energies, energies_from_couplings, energy_of, CouplingVector, EnergyTable,
    SpinConfig,
};

fn table(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-5.0f64..5.0, 1 << n)
}

proptest! {
    #[test]
    fn forward_matches_naive((n, j) in (1usize..=6).prop_flat_map(|n| (Just(n), table(n)))) {
        let e = energies_from_couplings(&CouplingVector::new(j.clone(), n).unwrap());
        let oracle = common::naive_energies(&j, n);
        for (a, b) in e.values().iter().zip(&oracle) {
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn inverse_matches_naive((n, e) in (1usize..=6).prop_flat_map(|n| (Just(n), table(n)))) {
        let j = couplings_from_energies(&EnergyTable::new(e.clone(), n).unwrap());
        let oracle = common::naive_couplings(&e, n);
        for (a, b) in j.values().iter().zip(&oracle) {
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn round_trip((n, e) in (1usize..=10).prop_flat_map(|n| (Just(n), table(n)))) {
        let back = energies_from_couplings(&couplings_from_energies(&EnergyTable::new(e.clone(), n).unwrap()));
        for (a, b) in back.values().iter().zip(&e) {
            prop_assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn pointwise_energy_agrees_with_table((n, j) in (1usize..=5).prop_flat_map(|n| (Just(n), table(n)))) {
        let c = CouplingVector::new(j, n).unwrap();
        let e = energies_from_couplings(&c);
        for i in 0..1 << n {
            let v = energy_of(&c, SpinConfig::new(i, n).unwrap()).unwrap();
            prop_assert!((v - e.get(i)).abs() < 1e-12);
        }
    }
}

#[test]
fn inverter_table() {
    let c = CouplingVector::zeros(2).unwrap().with(0b11, -1.5).unwrap();
    let e = energies_from_couplings(&c);
    // antiparallel configurations are the low-energy ones
    assert_eq!(e.values(), &[1.5, -1.5, -1.5, 1.5]);
    let back = couplings_from_energies(&e);
    assert_eq!(back.values(), &[0.0, 0.0, 0.0, -1.5]);
    let ferro = couplings_from_energies(&EnergyTable::new(vec![-1.5, 1.5, 1.5, -1.5], 2).unwrap());
    assert_eq!(ferro.values(), &[0.0, 0.0, 0.0, 1.5]);
}

#[test]
fn xor_has_one_component() {
    let e: Vec<f64> = (0..8)
        .map(|i| common::spin(i, 0) * common::spin(i, 1) * common::spin(i, 2))
        .collect();
    let j = couplings_from_energies(&EnergyTable::new(e.clone(), 3).unwrap());
    let oracle = common::naive_couplings(&e, 3);
    for k in 0..8 {
        let want = if k == 0b111 { -1.0 } else { 0.0 };
        assert!((j.get(k) - want).abs() < 1e-15, "k={k}");
        assert!((oracle[k] - want).abs() < 1e-15);
    }
}

#[test]
fn constant_spectrum() {
    let j = couplings_from_energies(&EnergyTable::new(vec![0.75; 16], 4).unwrap());
    assert_eq!(j.get(0), -0.75);
    assert!(j.values()[1..].iter().all(|&v| v == 0.0));
    let e = energies_from_couplings(&CouplingVector::zeros(3).unwrap().with(0, 2.0).unwrap());
    assert!(e.values().iter().all(|&v| v == -2.0));
}

#[test]
fn mismatched_lengths_are_rejected() {
    assert!(EnergyTable::new(vec![0.0; 5], 2).is_err());
    assert!(CouplingVector::new(vec![0.0; 4], 3).is_err());
    let c = CouplingVector::zeros(3).unwrap();
    assert!(energy_of(&c, SpinConfig::new(1, 2).unwrap()).is_err());
}
