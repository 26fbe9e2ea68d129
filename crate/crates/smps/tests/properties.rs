use ndarray::Array2;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use smps::canonical::{cut_spectrum, to_natural_form, truncate};
use smps::info::{mps_mutual_information, pinsker_gap, table_mutual_information};
use smps::models::{asep_mps, asep_representation, AsepParams};
use smps::oracle::asep_steady_state;
use smps::{l1_distance, StochasticMps};

fn random_mps(seed: u64, n: usize, d: usize, max_bond: usize) -> StochasticMps {
    StochasticMps::random(&mut ChaCha8Rng::seed_from_u64(seed), n, d, max_bond)
}

fn arb_mps() -> impl Strategy<Value = StochasticMps> {
    (any::<u64>(), 2usize..=6, 2usize..=3, 1usize..=4)
        .prop_map(|(seed, n, d, bond)| random_mps(seed, n, d, bond))
}

fn arb_rate() -> impl Strategy<Value = f64> {
    (1u32..=9).prop_map(|i| i as f64 / 10.0)
}

/// Scales bond `k` by a positive diagonal gauge and its inverse.
fn regauge(mps: &StochasticMps, k: usize, scale: &[f64]) -> StochasticMps {
    let mut sites = mps.sites().to_vec();
    for m in sites[k - 1].iter_mut() {
        for (mut col, s) in m.columns_mut().into_iter().zip(scale) {
            col *= *s;
        }
    }
    for m in sites[k].iter_mut() {
        for (mut row, s) in m.rows_mut().into_iter().zip(scale) {
            row /= *s;
        }
    }
    StochasticMps::new(mps.local_dim(), sites)
        .unwrap()
        .mark_normalized()
        .unwrap()
}

/// Reverses the order of the bond index at cut `k`.
fn permute_bond(mps: &StochasticMps, k: usize) -> StochasticMps {
    let mut sites = mps.sites().to_vec();
    let flip_cols = |m: &Array2<f64>| {
        let c = m.ncols();
        Array2::from_shape_fn(m.dim(), |(i, j)| m[[i, c - 1 - j]])
    };
    let flip_rows = |m: &Array2<f64>| {
        let r = m.nrows();
        Array2::from_shape_fn(m.dim(), |(i, j)| m[[r - 1 - i, j]])
    };
    sites[k - 1] = sites[k - 1].iter().map(flip_cols).collect();
    sites[k] = sites[k].iter().map(flip_rows).collect();
    StochasticMps::new(mps.local_dim(), sites)
        .unwrap()
        .mark_normalized()
        .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mutual_information_below_spectrum_entropy(mps in arb_mps()) {
        for k in 1..mps.num_sites() {
            let mi = mps_mutual_information(&mps, k).unwrap();
            let s = cut_spectrum(&mps, k).unwrap().entropy();
            prop_assert!(mi <= s + 1e-9, "cut {}: I = {} > S = {}", k, mi, s);
        }
    }

    #[test]
    fn truncation_error_within_certificate(mps in arb_mps()) {
        let table = mps.contract_to_table().unwrap();
        let nf = to_natural_form(&mps).unwrap();
        for cap in 1..=nf.max_bond_dim() {
            let t = truncate(&nf, cap).unwrap();
            let err = l1_distance(&table, &t.mps.contract_to_table().unwrap()).unwrap();
            prop_assert!(err <= t.err_bound + 1e-9, "cap {}: {} > {}", cap, err, t.err_bound);
        }
        let full = truncate(&nf, nf.max_bond_dim()).unwrap();
        prop_assert!(full.err_bound < 1e-12);
    }

    #[test]
    fn pinsker_inequality(mps in arb_mps()) {
        for k in 1..mps.num_sites() {
            let (lhs, rhs) = pinsker_gap(&mps.factorize_at_cut(k).unwrap());
            prop_assert!(lhs <= rhs + 1e-9);
        }
    }

    #[test]
    fn spectra_are_sorted_distributions(mps in arb_mps()) {
        for k in 1..mps.num_sites() {
            let s = cut_spectrum(&mps, k).unwrap();
            prop_assert_eq!(s.probs.len(), mps.bond_dims()[k]);
            prop_assert!((s.probs.iter().sum::<f64>() - 1.0).abs() < 1e-10);
            prop_assert!(s.probs.windows(2).all(|w| w[0] >= w[1]));
            prop_assert!(s.probs.iter().all(|&p| p >= 0.0));
        }
    }

    #[test]
    fn natural_form_invariants(mps in arb_mps()) {
        let nf = to_natural_form(&mps).unwrap();
        prop_assert!(nf.column_stochastic_defect() < 1e-10);
        prop_assert!(nf.row_stochastic_defect() < 1e-10);
        let rec = nf.reconstruct().unwrap();
        prop_assert!(l1_distance(&mps.contract_to_table().unwrap(), &rec).unwrap() < 1e-10);
        for k in 1..mps.num_sites() {
            let s = cut_spectrum(&mps, k).unwrap();
            let kept: Vec<f64> = s.probs.iter().copied().filter(|&p| p > 1e-12).collect();
            prop_assert_eq!(nf.bond(k).len(), kept.len());
            for (a, b) in nf.bond(k).iter().zip(&kept) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn factorization_matches_dense_table(mps in arb_mps()) {
        let table = mps.contract_to_table().unwrap();
        for k in 1..mps.num_sites() {
            let f = mps.factorize_at_cut(k).unwrap();
            let cols = f.right_count();
            f.for_each_joint(|a, b, p| {
                assert!((p - table.weights()[a * cols + b]).abs() < 1e-14);
            });
            let mi_dense = table_mutual_information(&table, k).unwrap();
            prop_assert!((mi_dense - mps_mutual_information(&mps, k).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn site_marginals_match_table(mps in arb_mps()) {
        let table = mps.contract_to_table().unwrap();
        for (k, m) in mps.site_marginals().iter().enumerate() {
            let t = table.marginal(&[k]).unwrap();
            for (a, b) in m.iter().zip(t.weights()) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn spectrum_is_gauge_invariant(
        seed in any::<u64>(),
        scales in proptest::collection::vec(0.1f64..10.0, 4),
    ) {
        let mps = random_mps(seed, 4, 2, 4);
        for k in 1..4 {
            let d = mps.bond_dims()[k];
            let before = cut_spectrum(&mps, k).unwrap();
            for other in [regauge(&mps, k, &scales[..d]), permute_bond(&mps, k)] {
                let t = l1_distance(
                    &mps.contract_to_table().unwrap(),
                    &other.contract_to_table().unwrap(),
                ).unwrap();
                prop_assert!(t < 1e-12);
                let after = cut_spectrum(&other, k).unwrap();
                for (a, b) in before.probs.iter().zip(&after.probs) {
                    prop_assert!((a - b).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn asep_matches_master_equation(alpha in arb_rate(), beta in arb_rate(), n in 1usize..=8) {
        let p = AsepParams::new(alpha, beta, n).unwrap();
        let exact = asep_steady_state(p).unwrap();
        let table = asep_mps(p).contract_to_table().unwrap();
        prop_assert!(l1_distance(&table, &exact).unwrap() <= 1e-9);
    }

    #[test]
    fn asep_spectrum_entropy_below_log_size(alpha in arb_rate(), beta in arb_rate(), n in 2usize..=16) {
        let mps = asep_representation(AsepParams::new(alpha, beta, n).unwrap()).to_embedded_mps();
        for k in 1..n {
            let s = cut_spectrum(&mps, k).unwrap();
            prop_assert!(s.entropy() <= ((n + 1) as f64).log2() + 1e-12);
            prop_assert!(mps_mutual_information(&mps, k).unwrap() <= s.entropy() + 1e-9);
        }
    }
}
