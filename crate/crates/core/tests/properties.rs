use proptest::prelude::*;

use cpfree_core::analytics::{self, SystemParams};
use cpfree_core::channel::{pdp_stats, CirSet, PowerDelayProfile};
use cpfree_core::dsp::{convolve_direct, convolve_fast, dft, idft, RngStream, C64};
use cpfree_core::freq::{build_combiner, freq_channel, CombinerKind};
use cpfree_core::harness::{ResultRow, ResultTable};
use cpfree_core::ofdm::full_mask;
use cpfree_core::tr::{coupling_matrices, equivalent_channel, zf_diag_fast, CouplingRoute, PsiCache, ZfBank};

fn random_cir(seed: u64, m: usize, k: usize, l: usize) -> CirSet {
    let mut rng = RngStream::new(seed, 0);
    CirSet::from_fn(m, k, l, |_| rng.cn(1.0)).unwrap()
}

fn powers() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..1.0, 1..8).prop_filter("positive head", |v| v[0] > 1e-3)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn overlap_save_matches_direct(len in 1usize..300, l in 1usize..40, extra in 0usize..64, seed in any::<u64>()) {
        let mut rng = RngStream::new(seed, 0);
        let x: Vec<C64> = (0..len).map(|_| rng.cn(1.0)).collect();
        let h: Vec<C64> = (0..l).map(|_| rng.cn(1.0)).collect();
        let fast = convolve_fast(&x, &h, l + extra).unwrap();
        let slow = convolve_direct(&x, &h).unwrap();
        prop_assert_eq!(fast.len(), slow.len());
        for (a, b) in fast.iter().zip(&slow) {
            prop_assert!((a - b).norm() < 1e-9);
        }
    }

    #[test]
    fn dft_round_trip(len in 1usize..200, seed in any::<u64>()) {
        let mut rng = RngStream::new(seed, 1);
        let x: Vec<C64> = (0..len).map(|_| rng.cn(1.0)).collect();
        let back = idft(&dft(&x).unwrap()).unwrap();
        for (a, b) in x.iter().zip(&back) {
            prop_assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn pdp_statistics_stay_in_range(p in powers(), extra in 0usize..64) {
        let pdp = PowerDelayProfile::from_powers("p", &p, 1.0).unwrap();
        let n = 2 * pdp.len() + extra;
        let s = pdp_stats(&pdp, n).unwrap();
        prop_assert!(s.lambda > 0.0 && s.lambda <= 1.0 + 1e-12);
        prop_assert!((s.rho_tilde.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(s.tau_av >= 0.0 && s.tau_av <= (pdp.len() - 1) as f64 + 1e-12);
        let sat = analytics::saturation_sinr(&s);
        prop_assert!(sat > 0.0);
    }

    #[test]
    fn closed_forms_grow_with_m(m in 1usize..1000, k in 1usize..50, sigma2 in 1e-3f64..100.0, lambda in 0.01f64..1.0) {
        let p = SystemParams::new(m, k, 512, 10, 1, sigma2, lambda, 1.0).unwrap();
        let q = p.with_m(m + 1).unwrap();
        prop_assert!(analytics::sinr_tr_mrc(&q) > analytics::sinr_tr_mrc(&p));
        prop_assert!(analytics::sinr_tr_zf(&q) > analytics::sinr_tr_zf(&p));
        prop_assert!(analytics::rate_cp_mrc(&q) >= analytics::rate_cp_mrc(&p));
        prop_assert!(analytics::rate_cp_zf_asym(&q) > analytics::rate_cp_zf_asym(&p));
    }

    #[test]
    fn zf_combiner_inverts_every_subcarrier(m in 3usize..8, k in 1usize..3, seed in any::<u64>()) {
        let cir = random_cir(seed, m, k, 3);
        let fc = freq_channel(&cir, 16).unwrap();
        let bank = build_combiner(&fc, CombinerKind::Zf, 0.1).unwrap();
        for p in 0..16 {
            let prod = bank.matrix(p).adjoint() * fc.matrix(p);
            for r in 0..k {
                for c in 0..k {
                    let want = if r == c { 1.0 } else { 0.0 };
                    prop_assert!((prod[(r, c)] - want).norm() < 1e-8);
                }
            }
        }
    }

    #[test]
    fn same_slot_matrices_are_hermitian_and_invertible(m in 4usize..10, k in 1usize..4, l in 1usize..5, seed in any::<u64>()) {
        let trch = equivalent_channel(&random_cir(seed, m, k, l));
        let n = 16;
        let diag = zf_diag_fast(&trch, n).unwrap();
        let bank = ZfBank::new(&trch, n, &full_mask(n)).unwrap();
        for (p, d) in diag.iter().enumerate() {
            prop_assert!((d - d.adjoint()).iter().all(|v| v.norm() < 1e-10));
            let eye = bank.inverse(p).unwrap() * d;
            for r in 0..k {
                for c in 0..k {
                    let want = if r == c { 1.0 } else { 0.0 };
                    prop_assert!((eye[(r, c)] - want).norm() < 1e-8);
                }
            }
        }
    }

    #[test]
    fn coupling_routes_agree(k in 1usize..4, l in 1usize..5, p in 0usize..20, seed in any::<u64>()) {
        let n = 20;
        let trch = equivalent_channel(&random_cir(seed, 5, k, l));
        let cache = PsiCache::new(n, l, &full_mask(n)).unwrap();
        let (c1, i1) = coupling_matrices(&trch, p, n, CouplingRoute::FullBand).unwrap();
        let (c2, i2) = coupling_matrices(&trch, p, n, CouplingRoute::Cached(&cache)).unwrap();
        for j in 0..k {
            prop_assert!((&c1[j] - &c2[j]).iter().all(|v| v.norm() < 1e-9));
            prop_assert!((&i1[j] - &i2[j]).iter().all(|v| v.norm() < 1e-9));
            // power matrices are Hermitian positive semidefinite
            for kk in 0..k {
                prop_assert!(c1[j][(kk, kk)].re >= -1e-12 && i1[j][(kk, kk)].re >= -1e-12);
            }
        }
    }

    #[test]
    fn csv_round_trips(values in prop::collection::vec((1usize..1000, any::<f64>(), prop::option::of(-50.0f64..50.0), prop::option::of(0.0f64..5.0)), 1..20)) {
        let rows = values
            .into_iter()
            .filter(|(_, v, _, _)| v.is_finite())
            .map(|(m, value, snr_db, stderr)| ResultRow {
                experiment: "prop".into(),
                m,
                k: 10,
                snr_db,
                method: "TR-ZF".into(),
                metric: "sinr_dB".into(),
                value,
                stderr,
                trials: 3,
                seed: 42,
            })
            .collect::<Vec<_>>();
        prop_assume!(!rows.is_empty());
        let t = ResultTable { rows };
        let back = ResultTable::from_csv_str(&t.to_csv_string().unwrap()).unwrap();
        prop_assert_eq!(back, t);
    }
}
