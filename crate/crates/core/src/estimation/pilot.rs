use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;

use crate::error::{NrcError, Result};
use crate::linalg::{CMat, complex_normal_matrix};

/// `N x N` orthonormal pilot matrix for the round-trip exchange.
#[derive(Debug, Clone, PartialEq)]
pub struct PilotMatrix {
    x: CMat,
}

impl PilotMatrix {
    /// Wraps an arbitrary square matrix, checking `X^H X = I`.
    pub fn new(x: CMat) -> Result<Self> {
        if !x.is_square() || x.nrows() == 0 {
            return Err(NrcError::Dimension(
                "pilot matrix must be square and non-empty".into(),
            ));
        }
        let n = x.nrows();
        let err = crate::linalg::frob_sq(&(x.adjoint() * &x - CMat::identity(n, n))).sqrt();
        if err > 1e-9 {
            return Err(NrcError::Parameter(format!(
                "pilot matrix is not orthonormal (deviation {err:.3e})"
            )));
        }
        Ok(Self { x })
    }

    pub fn matrix(&self) -> &CMat {
        &self.x
    }

    pub fn size(&self) -> usize {
        self.x.nrows()
    }
}

/// Unitary DFT matrix `X[m, n] = exp(-2 pi i m n / N) / sqrt(N)`.
pub fn gen_pilot_matrix(n: usize) -> Result<PilotMatrix> {
    if n == 0 {
        return Err(NrcError::Dimension("pilot matrix needs N >= 1".into()));
    }
    let scale = 1.0 / (n as f64).sqrt();
    let x = CMat::from_fn(n, n, |m, k| {
        // reduce the exponent first so large N keeps full phase accuracy
        let idx = (m * k) % n;
        Complex64::from_polar(scale, -2.0 * PI * idx as f64 / n as f64)
    });
    Ok(PilotMatrix { x })
}

/// BS sends `X`, the UEs receive `R = sqrt(rho_d) H X + Z_d` and echo `R^*`,
/// the BS receives `Y = sqrt(rho_u) G R^* + Z_u`. No RNG means noiseless.
pub fn roundtrip<R: Rng + ?Sized>(
    g: &CMat,
    h: &CMat,
    pilot: &PilotMatrix,
    rho_tilde_d: f64,
    rho_tilde_u: f64,
    rng: Option<&mut R>,
) -> Result<CMat> {
    let (n, k) = g.shape();
    if h.shape() != (k, n) || pilot.size() != n {
        return Err(NrcError::Dimension(format!(
            "round trip: G is {n}x{k}, H is {}x{}, pilot is {}x{}",
            h.nrows(),
            h.ncols(),
            pilot.size(),
            pilot.size()
        )));
    }
    let mut r = h * pilot.matrix() * Complex64::new(rho_tilde_d.sqrt(), 0.0);
    let mut y;
    match rng {
        Some(rng) => {
            r += complex_normal_matrix(k, n, 1.0, rng);
            y = g * r.conjugate() * Complex64::new(rho_tilde_u.sqrt(), 0.0);
            y += complex_normal_matrix(n, n, 1.0, rng);
        }
        None => {
            y = g * r.conjugate() * Complex64::new(rho_tilde_u.sqrt(), 0.0);
        }
    }
    Ok(y)
}

/// Processed round-trip observation `Q = Y^* X^H` of one subcarrier.
#[derive(Debug, Clone)]
pub struct ProcessedObservation {
    pub q: CMat,
    pub rho_tilde_u: f64,
    pub rho_tilde_d: f64,
    pub subcarrier_index: usize,
}

impl ProcessedObservation {
    /// `sqrt(rho_u rho_d)`, the gain of the noiseless observation.
    pub fn gain(&self) -> f64 {
        (self.rho_tilde_u * self.rho_tilde_d).sqrt()
    }
}

pub fn process_observation(
    y: &CMat,
    pilot: &PilotMatrix,
    rho_tilde_u: f64,
    rho_tilde_d: f64,
    subcarrier_index: usize,
) -> Result<ProcessedObservation> {
    if y.shape() != pilot.matrix().shape() {
        return Err(NrcError::Dimension(format!(
            "observation is {}x{}, pilot is {}x{}",
            y.nrows(),
            y.ncols(),
            pilot.size(),
            pilot.size()
        )));
    }
    Ok(ProcessedObservation {
        q: y.conjugate() * pilot.matrix().adjoint(),
        rho_tilde_u,
        rho_tilde_d,
        subcarrier_index,
    })
}
