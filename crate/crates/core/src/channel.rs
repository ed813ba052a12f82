//! Physical channels, transceiver mismatches and the non-reciprocal effective
//! channels.
//!
//! The effective uplink channel is `G = L_r M_r P F_t` and the downlink channel
//! is `H = F_r P^T M_t L_t`. They are related through `H = A G^T B` with
//! `A = F_r F_t^{-1}` (diagonal, UE side) and
//! `B = L_r^{-1} (M_r^T)^{-1} M_t L_t` (dense, BS side).

use rand::Rng;

use crate::error::{NrcError, Result};
use crate::impedance::ImpedanceMatrix;
use crate::linalg::{
    CMat, CVec, ONE, complex_normal, complex_normal_matrix, inverse, scale_cols, scale_rows,
};

/// Diagonal entries below this magnitude are redrawn so `L_r` and `F_t` stay
/// invertible.
pub const MIN_DIAGONAL_MAGNITUDE: f64 = 1e-6;

/// Attempts at drawing a non-singular coupling matrix before giving up.
const COUPLING_RETRIES: usize = 16;

/// Default reference (termination) impedance in ohms.
pub const DEFAULT_REFERENCE_OHMS: f64 = 50.0;

/// `N x K` matrix of i.i.d. CN(0, 1) entries.
pub fn gen_physical_channel<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> Result<CMat> {
    if k == 0 || n < k {
        return Err(NrcError::Dimension(format!(
            "physical channel needs N >= K >= 1, got N={n}, K={k}"
        )));
    }
    Ok(complex_normal_matrix(n, k, 1.0, rng))
}

/// Diagonal frequency-response mismatch `1 + e`, `e ~ CN(0, sigma2)`, returned
/// as the diagonal vector.
pub fn gen_fr_mismatch<R: Rng + ?Sized>(size: usize, sigma2: f64, rng: &mut R) -> Result<CVec> {
    if !(sigma2 >= 0.0 && sigma2.is_finite()) {
        return Err(NrcError::Parameter(format!(
            "frequency-response variance must be non-negative, got {sigma2}"
        )));
    }
    Ok(CVec::from_fn(size, |_, _| {
        loop {
            let v = ONE + complex_normal(rng, sigma2);
            if v.norm() >= MIN_DIAGONAL_MAGNITUDE {
                break v;
            }
        }
    }))
}

/// One draw of a coupling matrix together with the reflection coefficients
/// that produced it.
#[derive(Debug, Clone)]
pub struct CouplingDraw {
    pub matrix: CMat,
    pub reflection: CVec,
    pub terminations: CVec,
}

/// Builds `M = (Z_self + Z_ref) (Z + diag(z_i))^{-1}`, where
/// `z_i = Z_ref (1 + g_i) / (1 - g_i)` and `g_i ~ CN(0, sigma_m2)` are the
/// per-antenna input reflection coefficients.
pub fn gen_coupling_matrix<R: Rng + ?Sized>(
    impedance: &ImpedanceMatrix,
    sigma_m2: f64,
    z_ref: f64,
    rng: &mut R,
) -> Result<CouplingDraw> {
    if !(sigma_m2 >= 0.0 && sigma_m2.is_finite()) {
        return Err(NrcError::Parameter(format!(
            "reflection-coefficient variance must be non-negative, got {sigma_m2}"
        )));
    }
    if !(z_ref > 0.0) {
        return Err(NrcError::Parameter(format!(
            "reference impedance must be positive, got {z_ref}"
        )));
    }
    let n = impedance.n_antennas();
    let norm = impedance.self_impedance() + z_ref;
    for _ in 0..COUPLING_RETRIES {
        let reflection = CVec::from_fn(n, |_, _| {
            loop {
                let g = complex_normal(rng, sigma_m2);
                if (ONE - g).norm() >= MIN_DIAGONAL_MAGNITUDE {
                    break g;
                }
            }
        });
        let terminations = reflection.map(|g| (ONE + g) / (ONE - g) * z_ref);
        let mut loaded = impedance.matrix().clone();
        for i in 0..n {
            loaded[(i, i)] += terminations[i];
        }
        if let Ok(inv) = inverse(&loaded, "coupling matrix") {
            return Ok(CouplingDraw {
                matrix: inv * norm,
                reflection,
                terminations,
            });
        }
    }
    Err(NrcError::singular(
        format!("coupling matrix after {COUPLING_RETRIES} reflection draws"),
        f64::INFINITY,
    ))
}

/// NRC variances in linear scale plus the coupling reference impedance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NrcParams {
    pub sigma_f2: f64,
    pub sigma_l2: f64,
    pub sigma_m2: f64,
    pub z_ref: f64,
}

impl NrcParams {
    pub fn from_db(sigma_f2_db: f64, sigma_l2_db: f64, sigma_m2_db: f64) -> Self {
        use crate::linalg::db_to_linear;
        Self {
            sigma_f2: db_to_linear(sigma_f2_db),
            sigma_l2: db_to_linear(sigma_l2_db),
            sigma_m2: db_to_linear(sigma_m2_db),
            z_ref: DEFAULT_REFERENCE_OHMS,
        }
    }

    pub fn reciprocal() -> Self {
        Self {
            sigma_f2: 0.0,
            sigma_l2: 0.0,
            sigma_m2: 0.0,
            z_ref: DEFAULT_REFERENCE_OHMS,
        }
    }
}

/// One realization of every transceiver mismatch and the derived relative NRC
/// matrices.
#[derive(Debug, Clone)]
pub struct NrcRealization {
    /// Diagonal of `F_t` (UE transmit responses).
    pub f_t: CVec,
    /// Diagonal of `F_r` (UE receive responses).
    pub f_r: CVec,
    /// Diagonal of `L_t` (BS transmit responses).
    pub l_t: CVec,
    /// Diagonal of `L_r` (BS receive responses).
    pub l_r: CVec,
    pub m_t: CMat,
    pub m_r: CMat,
    pub params: NrcParams,
    /// Diagonal of `A = F_r F_t^{-1}`.
    pub a: CVec,
    pub b: CMat,
    /// `E_t = M_t L_t`.
    pub e_t: CMat,
    /// `E_r = L_r M_r`.
    pub e_r: CMat,
}

impl NrcRealization {
    /// Draws every mismatch for an `N`-antenna BS (the impedance matrix fixes
    /// `N`) serving `k` users. TX and RX coupling are independent draws.
    pub fn draw<R: Rng + ?Sized>(
        params: &NrcParams,
        impedance: &ImpedanceMatrix,
        k: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let n = impedance.n_antennas();
        let f_t = gen_fr_mismatch(k, params.sigma_f2, rng)?;
        let f_r = gen_fr_mismatch(k, params.sigma_f2, rng)?;
        let l_t = gen_fr_mismatch(n, params.sigma_l2, rng)?;
        let l_r = gen_fr_mismatch(n, params.sigma_l2, rng)?;
        let m_t = gen_coupling_matrix(impedance, params.sigma_m2, params.z_ref, rng)?.matrix;
        let m_r = gen_coupling_matrix(impedance, params.sigma_m2, params.z_ref, rng)?.matrix;
        let mut nrc = Self::from_parts(f_t, f_r, l_t, l_r, m_t, m_r)?;
        nrc.params = *params;
        Ok(nrc)
    }

    /// Fully reciprocal hardware: every mismatch matrix is the identity.
    pub fn identity(n: usize, k: usize) -> Self {
        Self::from_parts(
            CVec::from_element(k, ONE),
            CVec::from_element(k, ONE),
            CVec::from_element(n, ONE),
            CVec::from_element(n, ONE),
            CMat::identity(n, n),
            CMat::identity(n, n),
        )
        .expect("identity mismatches are invertible")
    }

    pub fn from_parts(
        f_t: CVec,
        f_r: CVec,
        l_t: CVec,
        l_r: CVec,
        m_t: CMat,
        m_r: CMat,
    ) -> Result<Self> {
        let n = l_t.len();
        if f_t.len() != f_r.len()
            || l_r.len() != n
            || m_t.shape() != (n, n)
            || m_r.shape() != (n, n)
        {
            return Err(NrcError::Dimension(
                "inconsistent NRC component sizes".into(),
            ));
        }
        let a = f_r.zip_map(&f_t, |r, t| r / t);
        // (M_r^T)^{-1} M_t through one LU solve
        let coupling = m_r
            .transpose()
            .lu()
            .solve(&m_t)
            .ok_or_else(|| NrcError::singular("receive coupling matrix", f64::INFINITY))?;
        let inv_l_r = l_r.map(|v| v.inv());
        let b = scale_cols(&scale_rows(&inv_l_r, &coupling), &l_t);
        let e_t = scale_cols(&m_t, &l_t);
        let e_r = scale_rows(&l_r, &m_r);
        Ok(Self {
            f_t,
            f_r,
            l_t,
            l_r,
            m_t,
            m_r,
            params: NrcParams::reciprocal(),
            a,
            b,
            e_t,
            e_r,
        })
    }

    pub fn n_antennas(&self) -> usize {
        self.l_t.len()
    }

    pub fn n_users(&self) -> usize {
        self.f_t.len()
    }

    pub fn a_matrix(&self) -> CMat {
        CMat::from_diagonal(&self.a)
    }

    /// `A' = A - I` as its diagonal.
    pub fn a_dev(&self) -> CVec {
        self.a.map(|v| v - ONE)
    }

    /// `B' = B - I`.
    pub fn b_dev(&self) -> CMat {
        let n = self.n_antennas();
        &self.b - CMat::identity(n, n)
    }
}

/// Per-subcarrier physical and effective channels.
#[derive(Debug, Clone)]
pub struct ChannelSet {
    pub p: CMat,
    pub g: CMat,
    pub h: CMat,
    pub subcarrier_index: usize,
}

/// `G = E_r P F_t`, `H = F_r P^T E_t`.
pub fn assemble_channels(
    p: &CMat,
    nrc: &NrcRealization,
    subcarrier_index: usize,
) -> Result<ChannelSet> {
    let (n, k) = p.shape();
    if n != nrc.n_antennas() || k != nrc.n_users() {
        return Err(NrcError::Dimension(format!(
            "physical channel is {n}x{k} but the NRC realization is for N={}, K={}",
            nrc.n_antennas(),
            nrc.n_users()
        )));
    }
    let g = scale_cols(&(&nrc.e_r * p), &nrc.f_t);
    let h = scale_rows(&nrc.f_r, &(p.transpose() * &nrc.e_t));
    Ok(ChannelSet {
        p: p.clone(),
        g,
        h,
        subcarrier_index,
    })
}

/// Channel set whose downlink is the exact transpose of the uplink.
pub fn reciprocal_channels(g: CMat, p: CMat, subcarrier_index: usize) -> ChannelSet {
    let h = g.transpose();
    ChannelSet {
        p,
        g,
        h,
        subcarrier_index,
    }
}

/// `||H - A G^T B||_F / ||H||_F`.
pub fn relative_reciprocity_residual(set: &ChannelSet, nrc: &NrcRealization) -> f64 {
    let predicted = scale_rows(&nrc.a, &(set.g.transpose() * &nrc.b));
    crate::linalg::relative_frob_error(&set.h, &predicted)
}
