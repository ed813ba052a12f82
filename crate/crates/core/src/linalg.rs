//! Small complex linear-algebra helpers on top of `nalgebra`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{NrcError, Result};

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

/// Relative singular-value cutoff used by [`min_norm_lstsq`].
pub const PINV_RCOND: f64 = 1e-12;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Draws one sample of CN(0, variance).
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let scale = (0.5 * variance).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(scale * re, scale * im)
}

/// Matrix with i.i.d. CN(0, variance) entries.
pub fn complex_normal_matrix<R: Rng + ?Sized>(
    rows: usize,
    cols: usize,
    variance: f64,
    rng: &mut R,
) -> CMat {
    // column-major fill keeps the draw order independent of nalgebra internals
    let mut m = CMat::zeros(rows, cols);
    for j in 0..cols {
        for i in 0..rows {
            m[(i, j)] = complex_normal(rng, variance);
        }
    }
    m
}

pub fn diag_matrix(d: &CVec) -> CMat {
    CMat::from_diagonal(d)
}

/// `diag(d) * m` without forming the diagonal matrix.
pub fn scale_rows(d: &CVec, m: &CMat) -> CMat {
    let mut out = m.clone();
    for (i, mut row) in out.row_iter_mut().enumerate() {
        row *= d[i];
    }
    out
}

/// `m * diag(d)` without forming the diagonal matrix.
pub fn scale_cols(m: &CMat, d: &CVec) -> CMat {
    let mut out = m.clone();
    for (j, mut col) in out.column_iter_mut().enumerate() {
        col *= d[j];
    }
    out
}

pub fn frob_sq(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum()
}

pub fn relative_frob_error(reference: &CMat, other: &CMat) -> f64 {
    let denom = frob_sq(reference).sqrt();
    let diff = frob_sq(&(reference - other)).sqrt();
    if denom == 0.0 { diff } else { diff / denom }
}

pub fn inverse(m: &CMat, context: &str) -> Result<CMat> {
    if !m.is_square() {
        return Err(NrcError::Dimension(format!(
            "{context}: cannot invert a {}x{} matrix",
            m.nrows(),
            m.ncols()
        )));
    }
    let inv = m
        .clone()
        .try_inverse()
        .ok_or_else(|| NrcError::singular(context, f64::INFINITY))?;
    if inv.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(NrcError::singular(context, f64::INFINITY));
    }
    Ok(inv)
}

/// Minimum-norm least-squares solution.
#[derive(Debug, Clone)]
pub struct LstsqSolution {
    pub x: CVec,
    pub rank: usize,
    pub condition: f64,
}

impl LstsqSolution {
    pub fn is_rank_deficient(&self, cols: usize) -> bool {
        self.rank < cols
    }
}

/// Solves `min ||a x - b||` through the SVD, discarding singular values below
/// `rcond * sigma_max`. Returns the minimum-norm solution when `a` is rank
/// deficient.
pub fn min_norm_lstsq(a: &CMat, b: &CVec, rcond: f64) -> Result<LstsqSolution> {
    if a.nrows() != b.len() {
        return Err(NrcError::Dimension(format!(
            "least squares: matrix has {} rows, rhs has {}",
            a.nrows(),
            b.len()
        )));
    }
    let cols = a.ncols();
    if cols == 0 {
        return Ok(LstsqSolution {
            x: CVec::zeros(0),
            rank: 0,
            condition: 1.0,
        });
    }
    let svd = a.clone().svd(true, true);
    let sv = &svd.singular_values;
    let smax = sv.iter().cloned().fold(0.0_f64, f64::max);
    let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if smax == 0.0 {
        return Ok(LstsqSolution {
            x: CVec::zeros(cols),
            rank: 0,
            condition: f64::INFINITY,
        });
    }
    let cutoff = rcond * smax;
    let rank = sv.iter().filter(|&&s| s > cutoff).count();
    let u = svd.u.as_ref().expect("left singular vectors requested");
    let v_t = svd.v_t.as_ref().expect("right singular vectors requested");
    let utb = u.adjoint() * b;
    let mut scaled = CVec::zeros(sv.len());
    for (i, &s) in sv.iter().enumerate() {
        if s > cutoff {
            scaled[i] = utb[i] / s;
        }
    }
    let x = v_t.adjoint() * scaled;
    let condition = if sv.len() < cols || smin == 0.0 {
        f64::INFINITY
    } else {
        smax / smin
    };
    Ok(LstsqSolution { x, rank, condition })
}

/// Real-valued symmetric solve through Cholesky with an LU fallback.
pub fn solve_real_spd(m: &DMatrix<f64>, rhs: &DVector<f64>, context: &str) -> Result<DVector<f64>> {
    if let Some(chol) = m.clone().cholesky() {
        let x = chol.solve(rhs);
        if x.iter().all(|v| v.is_finite()) {
            return Ok(x);
        }
    }
    let lu = m.clone().lu();
    let x = lu
        .solve(rhs)
        .ok_or_else(|| NrcError::singular(context, real_condition_estimate(m)))?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(NrcError::singular(context, real_condition_estimate(m)));
    }
    Ok(x)
}

pub fn real_condition_estimate(m: &DMatrix<f64>) -> f64 {
    let sv = m.clone().singular_values();
    let smax = sv.iter().cloned().fold(0.0_f64, f64::max);
    let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if smin == 0.0 {
        f64::INFINITY
    } else {
        smax / smin
    }
}

/// Power in dB to linear scale.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}
