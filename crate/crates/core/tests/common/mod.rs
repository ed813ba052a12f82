//! Independent reference implementations shared by the integration tests.
//! Nothing here calls into the solvers under test.

#![allow(dead_code)]

pub mod checks;

use std::f64::consts::PI;

use nrc_core::{CMat, CVec, Complex64};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

pub const J: Complex64 = Complex64::new(0.0, 1.0);

pub fn cn<R: Rng>(rng: &mut R) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn cn_mat<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> CMat {
    let mut m = CMat::zeros(rows, cols);
    for j in 0..cols {
        for i in 0..rows {
            m[(i, j)] = cn(rng);
        }
    }
    m
}

pub fn rel_err(reference: &CMat, other: &CMat) -> f64 {
    (reference - other).norm() / reference.norm()
}

/// Gaussian elimination with partial pivoting on a dense complex system.
pub fn gauss_solve(mut a: Vec<Vec<Complex64>>, mut b: Vec<Complex64>) -> Vec<Complex64> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].norm().total_cmp(&a[j][col].norm()))
            .unwrap();
        a.swap(col, pivot);
        b.swap(col, pivot);
        let p = a[col][col];
        assert!(p.norm() > 0.0, "singular oracle system");
        for row in col + 1..n {
            let f = a[row][col] / p;
            if f.norm() == 0.0 {
                continue;
            }
            for c in col..n {
                let v = a[col][c];
                a[row][c] -= f * v;
            }
            let v = b[col];
            b[row] -= f * v;
        }
    }
    let mut x = vec![Complex64::new(0.0, 0.0); n];
    for row in (0..n).rev() {
        let mut s = b[row];
        for c in row + 1..n {
            s -= a[row][c] * x[c];
        }
        x[row] = s / a[row][row];
    }
    x
}

/// Least squares `min ||sum_i x_i cols[i] - rhs||` through the complex
/// normal equations.
pub fn complex_lstsq(cols: &[Vec<Complex64>], rhs: &[Complex64]) -> Vec<Complex64> {
    let p = cols.len();
    let mut gram = vec![vec![Complex64::new(0.0, 0.0); p]; p];
    let mut proj = vec![Complex64::new(0.0, 0.0); p];
    for i in 0..p {
        for j in 0..p {
            gram[i][j] = cols[i]
                .iter()
                .zip(&cols[j])
                .map(|(a, b)| a.conj() * b)
                .sum();
        }
        proj[i] = cols[i].iter().zip(rhs).map(|(a, b)| a.conj() * b).sum();
    }
    gauss_solve(gram, proj)
}

/// Least squares through a Gram-Schmidt QR of the column set, applied twice
/// for orthogonality; avoids squaring the condition number.
pub fn qr_lstsq(cols: &[Vec<Complex64>], rhs: &[Complex64]) -> Vec<Complex64> {
    let p = cols.len();
    let mut q: Vec<Vec<Complex64>> = Vec::with_capacity(p);
    let mut r = vec![vec![Complex64::new(0.0, 0.0); p]; p];
    for (j, col) in cols.iter().enumerate() {
        let mut v = col.clone();
        for _ in 0..2 {
            for (i, qi) in q.iter().enumerate() {
                let c: Complex64 = qi.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                r[i][j] += c;
                for (vv, qq) in v.iter_mut().zip(qi) {
                    *vv -= c * qq;
                }
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        assert!(norm > 0.0, "dependent oracle columns");
        r[j][j] = Complex64::new(norm, 0.0);
        q.push(v.into_iter().map(|z| z / norm).collect());
    }
    let qtb: Vec<Complex64> = q
        .iter()
        .map(|qi| qi.iter().zip(rhs).map(|(a, b)| a.conj() * b).sum())
        .collect();
    let mut x = vec![Complex64::new(0.0, 0.0); p];
    for row in (0..p).rev() {
        let mut s = qtb[row];
        for c in row + 1..p {
            s -= r[row][c] * x[c];
        }
        x[row] = s / r[row][row];
    }
    x
}

pub fn vec_of(m: &CMat) -> Vec<Complex64> {
    m.iter().copied().collect()
}

/// Dense inverse through column-by-column elimination.
pub fn dense_inverse(m: &CMat) -> CMat {
    let n = m.nrows();
    let rows: Vec<Vec<Complex64>> = (0..n).map(|i| m.row(i).iter().copied().collect()).collect();
    let mut out = CMat::zeros(n, n);
    for j in 0..n {
        let mut e = vec![Complex64::new(0.0, 0.0); n];
        e[j] = Complex64::new(1.0, 0.0);
        let x = gauss_solve(rows.clone(), e);
        for i in 0..n {
            out[(i, j)] = x[i];
        }
    }
    out
}

fn adaptive_simpson(f: &dyn Fn(f64) -> Complex64, a: f64, b: f64, tol: f64) -> Complex64 {
    fn simpson(
        f: &dyn Fn(f64) -> Complex64,
        a: f64,
        fa: Complex64,
        b: f64,
        fb: Complex64,
    ) -> (f64, Complex64, Complex64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        (m, fm, (fa + fm * 4.0 + fb) * ((b - a) / 6.0))
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> Complex64,
        a: f64,
        fa: Complex64,
        b: f64,
        fb: Complex64,
        m: f64,
        fm: Complex64,
        whole: Complex64,
        tol: f64,
        depth: usize,
    ) -> Complex64 {
        let (lm, flm, left) = simpson(f, a, fa, m, fm);
        let (rm, frm, right) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.norm() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, fa, m, fm, lm, flm, left, tol / 2.0, depth - 1)
            + recurse(f, m, fm, b, fb, rm, frm, right, tol / 2.0, depth - 1)
    }
    let (fa, fb) = (f(a), f(b));
    let (m, fm, whole) = simpson(f, a, fa, b, fb);
    recurse(f, a, fa, b, fb, m, fm, whole, tol, 60)
}

/// Induced-EMF mutual impedance of two side-by-side half-wave dipoles by
/// direct quadrature of the current-weighted field integral.
pub fn quadrature_impedance(d: f64) -> Complex64 {
    let k = 2.0 * PI;
    let half = 0.25;
    let f = |z: f64| {
        let r1 = (d * d + (z - half).powi(2)).sqrt();
        let r2 = (d * d + (z + half).powi(2)).sqrt();
        let field = (-J * k * r1).exp() / r1 + (-J * k * r2).exp() / r2;
        field * (k * (half - z.abs())).sin()
    };
    let integral = adaptive_simpson(&f, -half, 0.0, 1e-13) + adaptive_simpson(&f, 0.0, half, 1e-13);
    J * 30.0 * integral
}

/// Straight-line downlink simulation: per block, returns the empirical
/// `log2(1 + SINR)` of every user with the receiver gain `alpha_hat[k]`.
pub fn block_log_terms(
    h: &CMat,
    u: &CMat,
    beta: f64,
    symbols: &[Vec<Complex64>],
    noise: &[Vec<Complex64>],
    rho: f64,
    alpha_hat: &[Complex64],
) -> Vec<f64> {
    let k_users = h.nrows();
    let n = h.ncols();
    let len = symbols[0].len();
    let mut gains = vec![vec![Complex64::new(0.0, 0.0); k_users]; k_users];
    for k in 0..k_users {
        for i in 0..k_users {
            for a in 0..n {
                gains[k][i] += h[(k, a)] * u[(a, i)];
            }
        }
    }
    let mut out = Vec::with_capacity(k_users);
    for k in 0..k_users {
        let mut residual = 0.0;
        for t in 0..len {
            let mut r = noise[k][t];
            for i in 0..k_users {
                r += gains[k][i] * beta * rho.sqrt() * symbols[i][t];
            }
            let e = r - alpha_hat[k] * rho.sqrt() * symbols[k][t];
            residual += e.norm_sqr();
        }
        let sinr = rho * alpha_hat[k].norm_sqr() / (residual / len as f64);
        out.push((1.0 + sinr).log2());
    }
    out
}

pub fn diag_of(v: &CVec) -> CMat {
    CMat::from_diagonal(v)
}
