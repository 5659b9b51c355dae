mod common;

use common::{
    balance_residuals, exact_family_scalars, random_trial, row_sums, stationary_weights,
    unbiasedness_zscores, FAMILY_NAMES,
};
use lgap::sampler::{
    collect_samples, exact_samples, local_liouvillian, proposal_probability, propose,
    transition_matrix, ChainConfig,
};
use lgap::{AncillaryState, BiBaseConfig, Boundary, EstimatorBundle, Lattice, LindbladModel};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn chain_model(n: usize) -> LindbladModel {
    LindbladModel::xyz(Lattice::chain(n, Boundary::Periodic).unwrap(), 1.3, 0.7, 2.0, 1.1).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn transition_matrix_is_reversible(n in 1usize..=2, m in 1usize..=4, seed: u64, identity: bool, max_flips in 1usize..=4) {
        let anc = if identity { AncillaryState::Identity } else { AncillaryState::all_down(n) };
        let trial = random_trial(n, m, 0.6, anc, seed);
        let p = transition_matrix(&trial, max_flips);
        for s in row_sums(&p) {
            prop_assert!((s - 1.0).abs() < 1e-12);
        }
        prop_assert!(p.iter().flatten().all(|&v| v >= -1e-15));
        let pi = stationary_weights(&trial);
        let (stationarity, detailed) = balance_residuals(&p, &pi);
        prop_assert!(stationarity < 1e-12, "stationarity residual {}", stationarity);
        prop_assert!(detailed < 1e-12, "detailed-balance residual {}", detailed);
    }

    #[test]
    fn proposals_flip_distinct_sites(len in 2usize..=16, max_flips in 1usize..=4, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::new();
        for _ in 0..50 {
            propose(len, max_flips, &mut rng, &mut out);
            prop_assert!(!out.is_empty() && out.len() <= max_flips.min(len));
            let mut sorted = out.clone();
            sorted.sort_unstable();
            sorted.dedup();
            prop_assert_eq!(sorted.len(), out.len());
            prop_assert!(out.iter().all(|&s| s < len));
        }
    }

    #[test]
    fn exact_local_values_are_independent_of_weights(seed: u64) {
        let n = 2;
        let trial = random_trial(n, 4, 0.5, AncillaryState::Identity, seed);
        let liouv = chain_model(n).vectorize();
        let samples = exact_samples(&trial, &liouv).unwrap();
        for (k, l) in samples.local.iter().enumerate() {
            let x = BiBaseConfig::new(samples.spins[k * 2 * n..(k + 1) * 2 * n].to_vec()).unwrap();
            prop_assert!((local_liouvillian(&trial, &liouv, &x).unwrap() - l).norm() < 1e-10);
        }
    }
}

#[test]
fn proposal_probabilities_sum_to_one() {
    for len in [2usize, 4, 8, 12] {
        for max_flips in 1..=4 {
            let mut total = 0.0;
            let mut binom = 1.0;
            for d in 1..=len {
                binom = binom * (len - d + 1) as f64 / d as f64;
                total += binom * proposal_probability(len, max_flips, d);
            }
            assert!((total - 1.0).abs() < 1e-12, "len {len} max_flips {max_flips}: {total}");
        }
    }
}

#[test]
fn estimators_are_unbiased_on_two_sites() {
    let n = 2;
    let trial = random_trial(n, 4, 0.4, AncillaryState::all_down(n), 11);
    let liouv = chain_model(n).vectorize();
    let exact = exact_family_scalars(&trial, &liouv);
    let mut outliers = [0usize; 5];
    for seed in 0..20 {
        let cfg = ChainConfig {
            samples: 4000,
            sweep: 2,
            seed,
            ..Default::default()
        };
        let z = unbiasedness_zscores(&trial, &liouv, &exact, &cfg, 20);
        for f in 0..5 {
            if z[f] > 3.0 {
                outliers[f] += 1;
            }
        }
    }
    for f in 0..5 {
        assert!(outliers[f] <= 1, "{}: {} outliers", FAMILY_NAMES[f], outliers[f]);
    }
}

#[test]
fn chains_are_reproducible_and_distinct() {
    let n = 2;
    let trial = random_trial(n, 4, 0.4, AncillaryState::Identity, 3);
    let liouv = chain_model(n).vectorize();
    let cfg = ChainConfig {
        samples: 300,
        chains: 3,
        seed: 5,
        ..Default::default()
    };
    let a = collect_samples(&trial, &liouv, &cfg).unwrap();
    let b = collect_samples(&trial, &liouv, &cfg).unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(x.spins, y.spins);
        assert_eq!(x.local, y.local);
    }
    assert_ne!(a[0].spins, a[1].spins);
    let bundle = EstimatorBundle::from_chains(&a).unwrap();
    assert_eq!(bundle.samples, 3 * (300 - 15));
}

#[test]
fn long_chain_visits_configurations_with_target_frequency() {
    let n = 1;
    let trial = random_trial(n, 2, 0.8, AncillaryState::Identity, 21);
    let liouv = LindbladModel::xyz(
        Lattice::from_bonds(1, vec![], lgap::model::Geometry::Chain, Boundary::Open).unwrap(),
        0.0,
        0.0,
        0.0,
        1.0,
    )
    .unwrap()
    .vectorize();
    let cfg = ChainConfig {
        samples: 200_000,
        seed: 9,
        ..Default::default()
    };
    let chains = collect_samples(&trial, &liouv, &cfg).unwrap();
    let pi = stationary_weights(&trial);
    let mut counts = vec![0.0; pi.len()];
    for x in chains[0].spins.chunks(2 * n) {
        counts[BiBaseConfig::new(x.to_vec()).unwrap().to_index()] += 1.0;
    }
    let total: f64 = counts.iter().sum();
    let tv: f64 = counts.iter().zip(&pi).map(|(c, p)| (c / total - p).abs()).sum::<f64>() / 2.0;
    assert!(tv < 0.01, "total variation distance {tv}");
}
