use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{NrcError, Result};
use crate::geometry::SparsitySupport;
use crate::linalg::{
    CMat, CVec, PINV_RCOND, frob_sq, min_norm_lstsq, real_condition_estimate, scale_rows,
    solve_real_spd,
};

/// Output of one B half-step.
#[derive(Debug, Clone)]
pub struct BStep {
    pub b_hat: CMat,
    /// Columns whose reduced system was rank deficient and fell back to the
    /// minimum-norm solution.
    pub rank_deficient: Vec<usize>,
}

/// Output of one A half-step.
#[derive(Debug, Clone)]
pub struct AStep {
    /// Diagonal of the estimate.
    pub xi: CVec,
    /// `[Re xi; Im xi]`.
    pub psi: DVector<f64>,
}

fn check_shapes(q: &CMat, g_hat: &CMat) -> Result<(usize, usize)> {
    let (n, k) = g_hat.shape();
    if q.shape() != (n, n) {
        return Err(NrcError::Dimension(format!(
            "observation is {}x{} but the channel estimate has {n} rows",
            q.nrows(),
            q.ncols()
        )));
    }
    Ok((n, k))
}

/// Column-wise least squares for `B` given `A`:
/// `b_j = (T_j)^+ q_j` with `T = c G^* diag(a) G^T` restricted to the support
/// of column `j`, and zeros elsewhere.
pub fn estimate_b_step(
    q: &CMat,
    g_hat: &CMat,
    a_hat: &CVec,
    support: &SparsitySupport,
    gain: f64,
) -> Result<BStep> {
    let (n, k) = check_shapes(q, g_hat)?;
    if a_hat.len() != k || support.n_antennas() != n {
        return Err(NrcError::Dimension(format!(
            "B step: {} A entries, support over {} antennas, channel is {n}x{k}",
            a_hat.len(),
            support.n_antennas()
        )));
    }
    // T = G^* W with W = c diag(a) G^T. A thin QR of G^* turns every column
    // problem into a K-row one with the same singular values and solution.
    let qr = g_hat.conjugate().qr();
    let basis = qr.q();
    let r = qr.r();
    let projected = basis.adjoint() * q;
    let w = scale_rows(&a_hat.map(|v| v * gain), &g_hat.transpose());
    let rw = r * w;

    let mut b_hat = CMat::zeros(n, n);
    let mut rank_deficient = Vec::new();
    for j in 0..n {
        let rows = support.support(j);
        let t = rw.select_columns(rows);
        let sol = min_norm_lstsq(&t, &projected.column(j).into_owned(), PINV_RCOND)?;
        if sol.is_rank_deficient(rows.len()) {
            rank_deficient.push(j);
        }
        for (&i, &v) in rows.iter().zip(sol.x.iter()) {
            b_hat[(i, j)] = v;
        }
    }
    Ok(BStep {
        b_hat,
        rank_deficient,
    })
}

/// Closed-form least squares for the diagonal of `A` given `B`.
///
/// Solves the real-stacked normal equations
/// `sum_j Wbar_j^T Wbar_j psi = sum_j Wbar_j^T qbar_j` with
/// `W_j = c G^* diag(G^T b_j)`. The sums are assembled in closed form:
/// `sum_j W_j^H W_j = c^2 (G^T G^*) .* (V^* V^T)` with `V = G^T B`.
pub fn estimate_a_step(q: &CMat, g_hat: &CMat, b_hat: &CMat, gain: f64) -> Result<AStep> {
    let (n, k) = check_shapes(q, g_hat)?;
    if b_hat.shape() != (n, n) {
        return Err(NrcError::Dimension(format!(
            "A step: B estimate is {}x{}, expected {n}x{n}",
            b_hat.nrows(),
            b_hat.ncols()
        )));
    }
    let gt = g_hat.transpose();
    let v = &gt * b_hat;
    let gram = &gt * g_hat.conjugate();
    let gq = &gt * q;
    let c2 = gain * gain;

    let normal = gram.component_mul(&(v.conjugate() * v.transpose())) * Complex64::new(c2, 0.0);
    let rhs = CVec::from_fn(k, |kk, _| {
        v.row(kk)
            .iter()
            .zip(gq.row(kk).iter())
            .map(|(a, b)| a.conj() * b)
            .sum::<Complex64>()
            * gain
    });

    let (m, b) = real_stack(&normal, &rhs);
    let psi = solve_real_spd(&m, &b, "A-step normal equations").map_err(|e| match e {
        NrcError::Singular { .. } => {
            NrcError::singular("A-step normal equations", real_condition_estimate(&m))
        }
        other => other,
    })?;
    let xi = CVec::from_fn(k, |i, _| Complex64::new(psi[i], psi[k + i]));
    Ok(AStep { xi, psi })
}

/// Real form `[[Re M, -Im M], [Im M, Re M]]`, `[Re b; Im b]` of `M x = b`.
pub fn real_stack(m: &CMat, b: &CVec) -> (DMatrix<f64>, DVector<f64>) {
    let k = m.nrows();
    let mut out = DMatrix::zeros(2 * k, 2 * k);
    let mut rhs = DVector::zeros(2 * k);
    for i in 0..k {
        for j in 0..k {
            let z = m[(i, j)];
            out[(i, j)] = z.re;
            out[(i, k + j)] = -z.im;
            out[(k + i, j)] = z.im;
            out[(k + i, k + j)] = z.re;
        }
        rhs[i] = b[i].re;
        rhs[k + i] = b[i].im;
    }
    (out, rhs)
}

/// `||Q - c G^* diag(a) G^T B||_F^2`.
pub fn objective(q: &CMat, g_hat: &CMat, a_hat: &CVec, b_hat: &CMat, gain: f64) -> f64 {
    let w = scale_rows(&a_hat.map(|v| v * gain), &(g_hat.transpose() * b_hat));
    frob_sq(&(q - g_hat.conjugate() * w))
}
