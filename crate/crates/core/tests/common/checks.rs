//! Oracle comparisons used both by the regular tests and by the acceptance
//! report. Each returns the worst observed discrepancy.

use nrc_core::channel::{assemble_channels, gen_physical_channel, relative_reciprocity_residual};
use nrc_core::estimation::{EstimatorOptions, estimate_a_step, estimate_b_step, iterate_estimate};
use nrc_core::impedance::mutual_impedance;
use nrc_core::precoding::{PrecoderKind, make_precoder, nrc_aware};
use nrc_core::{
    ArrayGeometry, CMat, CVec, Complex64, ImpedanceMatrix, NrcParams, NrcRealization,
    ProcessedObservation, SparsitySupport,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{cn, cn_mat, complex_lstsq, qr_lstsq, quadrature_impedance, rel_err, vec_of};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn near_identity<R: Rng>(n: usize, spread: f64, rng: &mut R) -> CVec {
    CVec::from_fn(n, |_, _| Complex64::new(1.0, 0.0) + cn(rng) * spread)
}

/// `B = I + small` restricted to `support`.
pub fn supported_b<R: Rng>(support: &SparsitySupport, spread: f64, rng: &mut R) -> CMat {
    let n = support.n_antennas();
    let mut b = CMat::zeros(n, n);
    for j in 0..n {
        for &i in support.support(j) {
            b[(i, j)] = if i == j {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            } + cn(rng) * spread;
        }
    }
    b
}

fn model(g: &CMat, a: &CVec, b: &CMat, gain: f64) -> CMat {
    g.conjugate() * CMat::from_diagonal(a) * g.transpose() * b * Complex64::new(gain, 0.0)
}

/// A half-step against the complex normal equations of the same objective.
pub fn a_step_vs_oracle(cases: u64) -> f64 {
    let mut worst: f64 = 0.0;
    for seed in 0..cases {
        let mut r = rng(seed);
        let (n, k) = (4 + (seed % 3) as usize, 2 + (seed % 2) as usize);
        let g = cn_mat(n, k, &mut r);
        let b = cn_mat(n, n, &mut r);
        let q = cn_mat(n, n, &mut r);
        let gain = 0.5 + r.r#gen::<f64>() * 3.0;
        let step = estimate_a_step(&q, &g, &b, gain).unwrap();

        let gtb = g.transpose() * &b;
        let cols: Vec<Vec<Complex64>> = (0..k)
            .map(|kk| {
                let outer = g.column(kk).conjugate() * gtb.row(kk) * Complex64::new(gain, 0.0);
                vec_of(&outer)
            })
            .collect();
        let x = complex_lstsq(&cols, &vec_of(&q));
        let oracle = CVec::from_vec(x);
        worst = worst.max((&oracle - &step.xi).norm() / oracle.norm());
    }
    worst
}

/// B half-step against one dense joint least-squares problem over every
/// free entry of `B` at once.
pub fn b_step_vs_dense(cases: u64) -> f64 {
    let mut worst: f64 = 0.0;
    for seed in 0..cases {
        let mut r = rng(100 + seed);
        // full support needs K >= N for a unique solution; the sparse case
        // uses a 2x3 grid with at most 4 free rows per column
        let (n, k, support) = if seed % 2 == 0 {
            let n = 2 + (seed as usize / 2) % 7;
            (n, n + (seed as usize % 3), SparsitySupport::full(n))
        } else {
            let geom = ArrayGeometry::new(2, 3, 0.5).unwrap();
            (6, 4, SparsitySupport::new(&geom, 1.0).unwrap())
        };
        let g = cn_mat(n, k, &mut r);
        let a = near_identity(k, 0.3, &mut r);
        let q = cn_mat(n, n, &mut r);
        let gain = 0.5 + r.r#gen::<f64>() * 3.0;
        let step = estimate_b_step(&q, &g, &a, &support, gain).unwrap();

        let t = g.conjugate() * CMat::from_diagonal(&a) * g.transpose() * Complex64::new(gain, 0.0);
        let mut unknowns = Vec::new();
        for j in 0..n {
            for &i in support.support(j) {
                unknowns.push((i, j));
            }
        }
        let cols: Vec<Vec<Complex64>> = unknowns
            .iter()
            .map(|&(i, j)| {
                let mut e = CMat::zeros(n, n);
                e.set_column(j, &t.column(i));
                vec_of(&e)
            })
            .collect();
        let x = qr_lstsq(&cols, &vec_of(&q));
        let mut oracle = CMat::zeros(n, n);
        for (&(i, j), v) in unknowns.iter().zip(x) {
            oracle[(i, j)] = v;
        }
        worst = worst.max(rel_err(&oracle, &step.b_hat));
    }
    worst
}

/// Noiseless half-steps fed with the true other factor: returns the worse of
/// the `B` and `A` relative errors.
pub fn noiseless_recovery(cases: u64) -> f64 {
    let geom = ArrayGeometry::new(3, 3, 0.5).unwrap();
    let support = SparsitySupport::new(&geom, 1.0).unwrap();
    let mut worst: f64 = 0.0;
    for seed in 0..cases {
        let mut r = rng(200 + seed);
        let k = 5;
        let g = cn_mat(9, k, &mut r);
        let a = near_identity(k, 0.1, &mut r);
        let b = supported_b(&support, 0.1, &mut r);
        let gain = 10f64.sqrt();
        let q = model(&g, &a, &b, gain);
        let b_hat = estimate_b_step(&q, &g, &a, &support, gain).unwrap().b_hat;
        let a_hat = estimate_a_step(&q, &g, &b, gain).unwrap().xi;
        worst = worst
            .max(rel_err(&b, &b_hat))
            .max((&a - &a_hat).norm() / a.norm());
    }
    worst
}

/// Largest relative increase of the objective between consecutive
/// half-steps on noisy instances (zero or negative means monotone).
pub fn objective_increase(cases: u64) -> f64 {
    let geom = ArrayGeometry::new(3, 4, 0.5).unwrap();
    let support = SparsitySupport::new(&geom, std::f64::consts::SQRT_2).unwrap();
    let mut worst = f64::NEG_INFINITY;
    for seed in 0..cases {
        let mut r = rng(300 + seed);
        let k = 10;
        let g = cn_mat(12, k, &mut r);
        let a = near_identity(k, 0.2, &mut r);
        let b = supported_b(&support, 0.2, &mut r);
        let gain = 3.0;
        let noise = cn_mat(12, 12, &mut r) * Complex64::new(0.5, 0.0);
        let obs = ProcessedObservation {
            q: model(&g, &a, &b, gain) + noise,
            rho_tilde_u: 1.0,
            rho_tilde_d: 9.0,
            subcarrier_index: 0,
        };
        let g_hat = &g + cn_mat(12, k, &mut r) * Complex64::new(0.1, 0.0);
        let options = EstimatorOptions {
            iters: 8,
            record_objective: true,
            record_history: false,
        };
        let est = iterate_estimate(&[obs], &[g_hat], &support, &options).unwrap();
        for w in est.objective_trace[0].windows(2) {
            worst = worst.max((w[1] - w[0]) / w[0]);
        }
    }
    worst
}

/// `||H - A G^T B|| / ||H||` on the 10x10 array at the default variances.
pub fn channel_identity(cases: u64) -> f64 {
    let geom = ArrayGeometry::new(10, 10, 0.5).unwrap();
    let imp = ImpedanceMatrix::from_geometry(&geom).unwrap();
    let params = NrcParams::from_db(-20.0, -20.0, -20.0);
    let mut worst: f64 = 0.0;
    for seed in 0..cases {
        let mut r = rng(400 + seed);
        let nrc = NrcRealization::draw(&params, &imp, 20, &mut r).unwrap();
        let p = gen_physical_channel(100, 20, &mut r).unwrap();
        let set = assemble_channels(&p, &nrc, 0).unwrap();
        worst = worst.max(relative_reciprocity_residual(&set, &nrc));
    }
    worst
}

/// Renormalized NRC-aware precoders under power-of-two rescaling of both
/// estimates. Returns the number of entries that differ at all.
pub fn scale_invariance_mismatches(cases: u64) -> usize {
    let mut mismatches = 0;
    for seed in 0..cases {
        let mut r = rng(500 + seed);
        let (n, k) = (8, 3);
        let h_hat = cn_mat(k, n, &mut r);
        let a = near_identity(k, 0.2, &mut r);
        let b = CMat::identity(n, n) + cn_mat(n, n, &mut r) * Complex64::new(0.1, 0.0);
        for kind in [PrecoderKind::Mrt, PrecoderKind::Zf] {
            let base = make_precoder(&h_hat, kind).unwrap();
            let reference = nrc_aware(&base, Some(&a), &b, true).unwrap().scaled();
            for (sa, sb) in [(2.0, 0.5), (4.0, 8.0), (0.25, 2.0), (1024.0, 1.0 / 64.0)] {
                let a2 = a.map(|v| v * sa);
                let b2 = b.map(|v| v * sb);
                let other = nrc_aware(&base, Some(&a2), &b2, true).unwrap().scaled();
                mismatches += reference
                    .iter()
                    .zip(other.iter())
                    .filter(|(x, y)| x != y)
                    .count();
            }
        }
    }
    mismatches
}

/// Worst relative error of the closed-form mutual impedance against
/// quadrature over a range of separations (in wavelengths).
pub fn impedance_vs_quadrature() -> f64 {
    [0.5, 0.6, 0.75, 1.0, 1.25, 1.5, 2.0, 3.0, 4.5, 6.4, 10.0]
        .iter()
        .map(|&d| {
            let closed = mutual_impedance(d).unwrap();
            let quad = quadrature_impedance(d);
            (closed - quad).norm() / quad.norm()
        })
        .fold(0.0, f64::max)
}
