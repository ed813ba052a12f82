mod common;

use common::{cn, cn_mat, rel_err};
use nrc_core::channel::{assemble_channels, gen_physical_channel, relative_reciprocity_residual};
use nrc_core::estimation::{EstimatorOptions, gen_pilot_matrix, iterate_estimate};
use nrc_core::harness::{ScenarioConfig, normalized_mse_bs};
use nrc_core::precoding::{
    BlockStats, PrecoderKind, dl_transmit_receive, make_precoder, nrc_aware, sinr_from_stats,
};
use nrc_core::{
    ArrayGeometry, CMat, CVec, Complex64, ImpedanceMatrix, NrcParams, NrcRealization,
    ProcessedObservation, SparsitySupport,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn nrc_precoder_ignores_positive_power_of_two_scaling(
        seed in any::<u64>(),
        ea in -12i32..12,
        eb in -12i32..12,
        zf in any::<bool>(),
    ) {
        let mut r = rng(seed);
        let (n, k) = (6, 3);
        let h_hat = cn_mat(k, n, &mut r);
        let a = CVec::from_fn(k, |_, _| Complex64::new(1.0, 0.0) + cn(&mut r) * 0.2);
        let b = CMat::identity(n, n) + cn_mat(n, n, &mut r) * Complex64::new(0.1, 0.0);
        let kind = if zf { PrecoderKind::Zf } else { PrecoderKind::Mrt };
        let base = make_precoder(&h_hat, kind).unwrap();
        let reference = nrc_aware(&base, Some(&a), &b, true).unwrap().scaled();
        let (sa, sb) = (2f64.powi(ea), 2f64.powi(eb));
        let other = nrc_aware(&base, Some(&a.map(|v| v * sa)), &b.map(|v| v * sb), true).unwrap().scaled();
        prop_assert_eq!(reference, other);
    }

    #[test]
    fn nrc_precoder_ignores_opposite_complex_scaling(
        seed in any::<u64>(),
        mag in -6.0f64..6.0,
        phase in -3.2f64..3.2,
        zf in any::<bool>(),
    ) {
        let mut r = rng(seed);
        let (n, k) = (6, 3);
        let h_hat = cn_mat(k, n, &mut r);
        let a = CVec::from_fn(k, |_, _| Complex64::new(1.0, 0.0) + cn(&mut r) * 0.2);
        let b = CMat::identity(n, n) + cn_mat(n, n, &mut r) * Complex64::new(0.1, 0.0);
        let kind = if zf { PrecoderKind::Zf } else { PrecoderKind::Mrt };
        let base = make_precoder(&h_hat, kind).unwrap();
        let c = Complex64::from_polar(2f64.powf(mag), phase);
        let reference = nrc_aware(&base, Some(&a), &b, false).unwrap().scaled();
        let other = nrc_aware(&base, Some(&a.map(|v| v * c)), &b.map(|v| v / c), false).unwrap().scaled();
        prop_assert!(rel_err(&reference, &other) <= 1e-12);
    }

    #[test]
    fn alternating_objective_is_monotone(seed in any::<u64>(), noise in 0.0f64..2.0, d_index in 0usize..3) {
        let d = [0.0, 1.0, std::f64::consts::SQRT_2][d_index];
        let geom = ArrayGeometry::new(3, 3, 0.5).unwrap();
        let support = SparsitySupport::new(&geom, d).unwrap();
        let mut r = rng(seed);
        let k = 6;
        let g = cn_mat(9, k, &mut r);
        let a = CVec::from_fn(k, |_, _| Complex64::new(1.0, 0.0) + cn(&mut r) * 0.1);
        let b = CMat::identity(9, 9) + cn_mat(9, 9, &mut r) * Complex64::new(0.05, 0.0);
        let q = g.conjugate() * CMat::from_diagonal(&a) * g.transpose() * &b * Complex64::new(3.0, 0.0)
            + cn_mat(9, 9, &mut r) * Complex64::new(noise, 0.0);
        let obs = ProcessedObservation { q, rho_tilde_u: 1.0, rho_tilde_d: 9.0, subcarrier_index: 0 };
        let options = EstimatorOptions { iters: 6, record_objective: true, record_history: false };
        let est = iterate_estimate(&[obs], &[g], &support, &options).unwrap();
        for w in est.objective_trace[0].windows(2) {
            prop_assert!(w[1] <= w[0] * (1.0 + 1e-12), "{} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn received_signal_decomposes_exactly(seed in any::<u64>(), rho_db in -10.0f64..30.0, noisy in any::<bool>()) {
        let mut r = rng(seed);
        let (n, k) = (12, 4);
        let h = cn_mat(k, n, &mut r);
        let p = make_precoder(&cn_mat(k, n, &mut r), PrecoderKind::Zf).unwrap();
        let s = cn_mat(k, 30, &mut r);
        let alpha_hat = CVec::from_fn(k, |_, _| cn(&mut r));
        let rho = 10f64.powf(rho_db / 10.0);
        let link = if noisy {
            dl_transmit_receive(&h, &p, &s, rho, &alpha_hat, Some(&mut r)).unwrap()
        } else {
            dl_transmit_receive::<ChaCha8Rng>(&h, &p, &s, rho, &alpha_hat, None).unwrap()
        };
        prop_assert!((link.reconstruct() - &link.r).norm() <= 1e-12 * link.r.norm().max(1.0));
    }

    #[test]
    fn sufficient_statistics_reproduce_the_direct_sinr(seed in any::<u64>(), rho in 0.1f64..1000.0) {
        let mut r = rng(seed);
        let len = 50;
        let s: Vec<Complex64> = (0..len).map(|_| cn(&mut r)).collect();
        let rx: Vec<Complex64> = (0..len).map(|_| cn(&mut r) * 3.0).collect();
        let alpha = cn(&mut r);
        let c = alpha * rho.sqrt();
        let residual = rx.iter().zip(&s).map(|(y, x)| (y - c * x).norm_sqr()).sum::<f64>() / len as f64;
        let signal = c.norm_sqr() * s.iter().map(|x| x.norm_sqr()).sum::<f64>() / len as f64;
        let stats = BlockStats::from_rows(rx.iter(), s.iter());
        let got = sinr_from_stats(&stats, alpha, rho, 1e9);
        prop_assert!((got - signal / residual).abs() <= 1e-9 * (signal / residual));
    }

    #[test]
    fn normalized_mse_of_a_scaled_copy(seed in any::<u64>(), re in -2.0f64..2.0, im in -2.0f64..2.0) {
        let mut r = rng(seed);
        let b = cn_mat(5, 5, &mut r);
        let c = Complex64::new(re, im);
        let mse = normalized_mse_bs(&b, &(&b * c)).unwrap();
        prop_assert!((mse - (Complex64::new(1.0, 0.0) - c).norm_sqr()).abs() <= 1e-12 * mse.max(1.0));
        prop_assert_eq!(normalized_mse_bs(&b, &b).unwrap(), 0.0);
    }

    #[test]
    fn downlink_identity_holds_for_any_variances(
        seed in any::<u64>(),
        f in -40.0f64..-5.0,
        l in -40.0f64..-5.0,
        m in -40.0f64..-5.0,
    ) {
        let geom = ArrayGeometry::new(3, 4, 0.5).unwrap();
        let imp = ImpedanceMatrix::from_geometry(&geom).unwrap();
        let mut r = rng(seed);
        let nrc = NrcRealization::draw(&NrcParams::from_db(f, l, m), &imp, 4, &mut r).unwrap();
        let set = assemble_channels(&gen_physical_channel(12, 4, &mut r).unwrap(), &nrc, 0).unwrap();
        prop_assert!(relative_reciprocity_residual(&set, &nrc) <= 1e-10);
    }

    #[test]
    fn reciprocal_hardware_has_identity_nrc(seed in any::<u64>(), rows in 1usize..5, cols in 2usize..5) {
        let geom = ArrayGeometry::new(rows, cols, 0.5).unwrap();
        let imp = ImpedanceMatrix::from_geometry(&geom).unwrap();
        let n = rows * cols;
        let nrc = NrcRealization::draw(&NrcParams::from_db(f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY), &imp, 2, &mut rng(seed)).unwrap();
        prop_assert!(rel_err(&CMat::identity(n, n), &nrc.b) <= 1e-12);
        prop_assert!(nrc.a.iter().all(|v| (v - Complex64::new(1.0, 0.0)).norm() <= 1e-15));
    }

    #[test]
    fn support_is_symmetric_and_bounded(rows in 1usize..7, cols in 1usize..7, d_index in 0usize..4) {
        let d = [0.0, 1.0, std::f64::consts::SQRT_2, 2.0][d_index];
        let geom = ArrayGeometry::new(rows, cols, 0.5).unwrap();
        let s = SparsitySupport::new(&geom, d).unwrap();
        let n = rows * cols;
        for j in 0..n {
            prop_assert!(s.contains(j, j));
            prop_assert!(s.r_j(j) <= s.r_of_d());
            for i in 0..n {
                prop_assert_eq!(s.contains(i, j), s.contains(j, i));
            }
        }
    }

    #[test]
    fn pilot_matrix_is_unitary(n in 1usize..80) {
        let x = gen_pilot_matrix(n).unwrap();
        let gram = x.matrix().adjoint() * x.matrix();
        prop_assert!((gram - CMat::identity(n, n)).norm() <= 1e-11);
    }

    #[test]
    fn config_survives_a_json_round_trip(seed in any::<u64>(), trials in 1usize..500, rho_d in -10.0f64..30.0) {
        let cfg = ScenarioConfig { seed, trials, rho_d, ..ScenarioConfig::default() };
        let text = serde_json::to_string(&cfg).unwrap();
        prop_assert_eq!(ScenarioConfig::from_json(&text).unwrap(), cfg);
    }
}
