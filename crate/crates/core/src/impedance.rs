//! Induced-EMF impedances of parallel, side-by-side thin half-wave dipoles.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;

use crate::error::{NrcError, Result};
use crate::geometry::ArrayGeometry;
use crate::linalg::CMat;

/// Free-space wave impedance, rounded to 120*pi as in the classical dipole
/// tables.
pub const ETA0: f64 = 120.0 * PI;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Sine and cosine integrals `(Si(x), Ci(x))` for `x > 0`.
///
/// Power series below `x = 2`, continued fraction for the exponential
/// integral `E1(ix)` above.
pub fn sine_cosine_integrals(x: f64) -> (f64, f64) {
    assert!(x > 0.0, "Si/Ci need a positive argument");
    const EPS: f64 = 1e-16;
    const MAX_ITER: usize = 500;

    if x > 2.0 {
        // modified Lentz evaluation of E1(ix)
        let tiny = 1e-300;
        let mut b = Complex64::new(1.0, x);
        let mut c = Complex64::new(1.0 / tiny, 0.0);
        let mut d = b.inv();
        let mut h = d;
        for i in 2..MAX_ITER {
            let a = -(((i - 1) * (i - 1)) as f64);
            b += Complex64::new(2.0, 0.0);
            d = (d * a + b).inv();
            c = b + c.inv() * a;
            let del = c * d;
            h *= del;
            if (del.re - 1.0).abs() + del.im.abs() < EPS {
                break;
            }
        }
        h *= Complex64::new(x.cos(), -x.sin());
        let cs = -h.conj() + Complex64::new(0.0, FRAC_PI_2);
        return (cs.im, cs.re);
    }

    // term n is (-1)^(n/2) x^n / (n n!): odd n feed Si, even n feed Ci
    let mut si = 0.0;
    let mut ci = 0.0;
    let mut power_over_fact = 1.0;
    for n in 1..MAX_ITER {
        power_over_fact *= x / n as f64;
        let term = power_over_fact / n as f64;
        let signed = if (n / 2) % 2 == 0 { term } else { -term };
        if n % 2 == 1 {
            si += signed;
        } else {
            ci += signed;
        }
        if term < EPS * (si.abs() + ci.abs()).max(EPS) {
            break;
        }
    }
    (si, ci + EULER_GAMMA + x.ln())
}

/// Mutual impedance between two parallel side-by-side half-wave dipoles at
/// horizontal separation `distance_wavelengths`.
pub fn mutual_impedance(distance_wavelengths: f64) -> Result<Complex64> {
    if !(distance_wavelengths > 0.0 && distance_wavelengths.is_finite()) {
        return Err(NrcError::Parameter(format!(
            "mutual impedance needs a positive separation, got {distance_wavelengths} (use self_impedance for d = 0)"
        )));
    }
    let k = 2.0 * PI;
    let l = 0.5;
    let d = distance_wavelengths;
    let root = (d * d + l * l).sqrt();
    let u0 = k * d;
    let u1 = k * (root + l);
    let u2 = k * (root - l);
    let (s0, c0) = sine_cosine_integrals(u0);
    let (s1, c1) = sine_cosine_integrals(u1);
    let (s2, c2) = sine_cosine_integrals(u2);
    let scale = ETA0 / (4.0 * PI);
    Ok(Complex64::new(
        scale * (2.0 * c0 - c1 - c2),
        -scale * (2.0 * s0 - s1 - s2),
    ))
}

/// Input impedance of an isolated thin half-wave dipole (about 73.1 + j42.5 ohm).
pub fn self_impedance() -> Complex64 {
    let kl = 2.0 * PI;
    let (s, c) = sine_cosine_integrals(kl);
    let scale = ETA0 / (4.0 * PI);
    Complex64::new(scale * (EULER_GAMMA + kl.ln() - c), scale * s)
}

/// Symmetric `N x N` array impedance matrix, self impedance on the diagonal.
#[derive(Debug, Clone)]
pub struct ImpedanceMatrix {
    z: CMat,
    self_z: Complex64,
}

impl ImpedanceMatrix {
    pub fn from_geometry(geometry: &ArrayGeometry) -> Result<Self> {
        let n = geometry.n_antennas();
        let self_z = self_impedance();
        let mut z = CMat::from_diagonal_element(n, n, self_z);
        for i in 0..n {
            for j in (i + 1)..n {
                let zij = mutual_impedance(geometry.distance(i, j))?;
                z[(i, j)] = zij;
                z[(j, i)] = zij;
            }
        }
        Ok(Self { z, self_z })
    }

    /// Array with all mutual impedances forced to zero.
    pub fn decoupled(n: usize) -> Self {
        let self_z = self_impedance();
        Self {
            z: CMat::from_diagonal_element(n, n, self_z),
            self_z,
        }
    }

    pub fn matrix(&self) -> &CMat {
        &self.z
    }

    pub fn self_impedance(&self) -> Complex64 {
        self.self_z
    }

    pub fn n_antennas(&self) -> usize {
        self.z.nrows()
    }

    /// Largest mutual-impedance magnitude over all distinct pairs.
    pub fn max_mutual_magnitude(&self) -> f64 {
        let n = self.n_antennas();
        let mut best = 0.0_f64;
        for j in 0..n {
            for i in 0..n {
                if i != j {
                    best = best.max(self.z[(i, j)].norm());
                }
            }
        }
        best
    }
}
