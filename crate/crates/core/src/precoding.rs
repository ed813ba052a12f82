//! Uplink training, MRT/ZF precoding, the NRC-aware transform, downlink
//! reception and SINR.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_1_SQRT_2;

use crate::error::{NrcError, Result};
use crate::linalg::{CMat, CVec, ZERO, complex_normal_matrix, frob_sq, inverse, scale_cols};

/// Default ceiling for a saturated SINR.
pub const DEFAULT_SINR_CAP: f64 = 1e9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PrecoderKind {
    Mrt,
    Zf,
}

impl PrecoderKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PrecoderKind::Mrt => "mrt",
            PrecoderKind::Zf => "zf",
        }
    }
}

impl std::fmt::Display for PrecoderKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// How the power-normalization expectation is evaluated.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BetaConvention {
    /// `beta = 1 / sqrt(Tr(U^H U))` for every channel realization.
    #[default]
    PerRealization,
    /// `beta = 1 / sqrt(mean Tr(U^H U))` over the realizations of one trial.
    Ensemble,
}

/// Linear precoder. The transmitted signal is `beta * u * s`.
#[derive(Debug, Clone)]
pub struct Precoder {
    pub u: CMat,
    pub beta: f64,
    pub kind: PrecoderKind,
    pub nrc_corrected: bool,
}

impl Precoder {
    /// `beta * u`.
    pub fn scaled(&self) -> CMat {
        &self.u * Complex64::new(self.beta, 0.0)
    }

    /// `Tr(U^H U)` of the unscaled direction.
    pub fn raw_power(&self) -> f64 {
        frob_sq(&self.u)
    }

    /// Average transmit power `beta^2 Tr(U^H U)`.
    pub fn transmit_power(&self) -> f64 {
        self.beta * self.beta * self.raw_power()
    }

    pub fn with_beta(mut self, beta: f64) -> Self {
        self.beta = beta;
        self
    }
}

/// `1 / sqrt(Tr(U^H U))`.
pub fn power_normalization(u: &CMat) -> Result<f64> {
    let p = frob_sq(u);
    if !(p > 0.0 && p.is_finite()) {
        return Err(NrcError::singular(
            "precoder power normalization",
            f64::INFINITY,
        ));
    }
    Ok(1.0 / p.sqrt())
}

/// `1 / sqrt(mean_i Tr(U_i^H U_i))` over a set of realizations.
pub fn ensemble_beta<'a>(precoders: impl IntoIterator<Item = &'a Precoder>) -> Result<f64> {
    let (mut total, mut count) = (0.0, 0usize);
    for p in precoders {
        total += p.raw_power();
        count += 1;
    }
    if count == 0 || !(total > 0.0 && total.is_finite()) {
        return Err(NrcError::singular(
            "ensemble power normalization",
            f64::INFINITY,
        ));
    }
    Ok((count as f64 / total).sqrt())
}

/// Uplink training with `tau_u` orthogonal pilots followed by the per-entry
/// LMMSE estimate for unit-variance channel entries.
pub fn ul_train_and_estimate<R: Rng + ?Sized>(
    g: &CMat,
    rho_u: f64,
    tau_u: usize,
    rng: &mut R,
) -> Result<CMat> {
    let k = g.ncols();
    if tau_u < k {
        return Err(NrcError::PilotBudget(format!("tau_u = {tau_u} < K = {k}")));
    }
    if !(rho_u > 0.0) {
        return Err(NrcError::Parameter(format!(
            "uplink SNR must be positive, got {rho_u}"
        )));
    }
    let snr = rho_u * tau_u as f64;
    let noise = complex_normal_matrix(g.nrows(), k, 1.0, rng);
    let y = g * Complex64::new(snr.sqrt(), 0.0) + noise;
    Ok(y * Complex64::new(snr.sqrt() / (1.0 + snr), 0.0))
}

/// MRT (`U = H^H`) or ZF (`U = H^H (H H^H)^{-1}`) with per-realization `beta`.
pub fn make_precoder(h_hat: &CMat, kind: PrecoderKind) -> Result<Precoder> {
    let hh = h_hat.adjoint();
    let u = match kind {
        PrecoderKind::Mrt => hh,
        PrecoderKind::Zf => {
            let gram = h_hat * &hh;
            let inv = inverse(&gram, "zero-forcing Gram matrix")?;
            hh * inv
        }
    };
    let beta = power_normalization(&u)?;
    Ok(Precoder {
        u,
        beta,
        kind,
        nrc_corrected: false,
    })
}

/// `U_nrc = B^{-1} U A^{-1}`.
///
/// The original `beta` is kept unless `renormalize` is set, in which case it
/// is recomputed on `U_nrc`.
pub fn nrc_aware(
    precoder: &Precoder,
    a_hat: Option<&CVec>,
    b_hat: &CMat,
    renormalize: bool,
) -> Result<Precoder> {
    let n = precoder.u.nrows();
    if b_hat.shape() != (n, n) {
        return Err(NrcError::Dimension(format!(
            "B estimate is {}x{}, precoder has {n} rows",
            b_hat.nrows(),
            b_hat.ncols()
        )));
    }
    let mut u = b_hat
        .clone()
        .lu()
        .solve(&precoder.u)
        .filter(|m| m.iter().all(|z| z.re.is_finite() && z.im.is_finite()))
        .ok_or_else(|| NrcError::singular("B estimate", f64::INFINITY))?;
    if let Some(a) = a_hat {
        if a.len() != u.ncols() {
            return Err(NrcError::Dimension(format!(
                "A estimate has {} entries, precoder has {} columns",
                a.len(),
                u.ncols()
            )));
        }
        if a.iter().any(|v| v.norm() == 0.0) {
            return Err(NrcError::singular("A estimate", f64::INFINITY));
        }
        u = scale_cols(&u, &a.map(|v| v.inv()));
    }
    let beta = if renormalize {
        power_normalization(&u)?
    } else {
        precoder.beta
    };
    Ok(Precoder {
        u,
        beta,
        kind: precoder.kind,
        nrc_corrected: true,
    })
}

/// `K x len` unit-modulus QPSK symbols.
pub fn qpsk_symbols<R: Rng + ?Sized>(k: usize, len: usize, rng: &mut R) -> CMat {
    let mut s = CMat::zeros(k, len);
    for t in 0..len {
        for i in 0..k {
            let re = if rng.r#gen::<bool>() {
                FRAC_1_SQRT_2
            } else {
                -FRAC_1_SQRT_2
            };
            let im = if rng.r#gen::<bool>() {
                FRAC_1_SQRT_2
            } else {
                -FRAC_1_SQRT_2
            };
            s[(i, t)] = Complex64::new(re, im);
        }
    }
    s
}

/// Beamformed gains `beta h_k^T u_i` as a `K x K` matrix.
pub fn beamformed_channel(h: &CMat, precoder: &Precoder) -> Result<CMat> {
    if h.ncols() != precoder.u.nrows() || h.nrows() != precoder.u.ncols() {
        return Err(NrcError::Dimension(format!(
            "channel is {}x{}, precoder is {}x{}",
            h.nrows(),
            h.ncols(),
            precoder.u.nrows(),
            precoder.u.ncols()
        )));
    }
    Ok(h * &precoder.u * Complex64::new(precoder.beta, 0.0))
}

/// Per-user effective gains `beta h_k^T u_k`.
pub fn effective_gains(h: &CMat, precoder: &Precoder) -> Result<CVec> {
    Ok(beamformed_channel(h, precoder)?.diagonal())
}

/// One block of downlink data symbols (`K x len` matrices).
///
/// `r = sqrt(rho) alpha s + z_si + z_iui + z_d` holds entrywise.
#[derive(Debug, Clone)]
pub struct LinkSample {
    pub r: CMat,
    pub s: CMat,
    pub z_si: CMat,
    pub z_iui: CMat,
    pub z_d: CMat,
    pub alpha_hat: CVec,
    pub rho_d: f64,
}

impl LinkSample {
    /// Rebuilds `r` from the decomposition terms.
    pub fn reconstruct(&self) -> CMat {
        let useful = scale_rows_by(&self.s, &self.alpha_hat, self.rho_d.sqrt());
        useful + &self.z_si + &self.z_iui + &self.z_d
    }

    /// Sufficient statistics for block-averaged SINR, one entry per user.
    pub fn stats(&self) -> Vec<BlockStats> {
        (0..self.r.nrows())
            .map(|k| BlockStats::from_rows(self.r.row(k).iter(), self.s.row(k).iter()))
            .collect()
    }
}

fn scale_rows_by(m: &CMat, d: &CVec, scale: f64) -> CMat {
    let mut out = m.clone();
    for (i, mut row) in out.row_iter_mut().enumerate() {
        row *= d[i] * scale;
    }
    out
}

/// Simulates `r = sqrt(rho_d) beta H U s + z_d` and splits it into the
/// useful, self-interference and inter-user interference parts relative to
/// the receiver's gain estimate `alpha_hat`. Passing no RNG switches noise
/// off.
pub fn dl_transmit_receive<R: Rng + ?Sized>(
    h: &CMat,
    precoder: &Precoder,
    s: &CMat,
    rho_d: f64,
    alpha_hat: &CVec,
    rng: Option<&mut R>,
) -> Result<LinkSample> {
    let k = h.nrows();
    if s.nrows() != k || alpha_hat.len() != k {
        return Err(NrcError::Dimension(format!(
            "{k} users but {} symbol streams and {} gain estimates",
            s.nrows(),
            alpha_hat.len()
        )));
    }
    if !(rho_d >= 0.0) {
        return Err(NrcError::Parameter(format!(
            "downlink SNR must be non-negative, got {rho_d}"
        )));
    }
    let e = beamformed_channel(h, precoder)?;
    let amp = rho_d.sqrt();
    let diag = e.diagonal();
    let mut off = e.clone();
    off.fill_diagonal(ZERO);
    let z_si = scale_rows_by(s, &(diag - alpha_hat), amp);
    let z_iui = off * s * Complex64::new(amp, 0.0);
    let z_d = match rng {
        Some(rng) => complex_normal_matrix(k, s.ncols(), 1.0, rng),
        None => CMat::zeros(k, s.ncols()),
    };
    let r = &e * s * Complex64::new(amp, 0.0) + &z_d;
    Ok(LinkSample {
        r,
        s: s.clone(),
        z_si,
        z_iui,
        z_d,
        alpha_hat: alpha_hat.clone(),
        rho_d,
    })
}

/// `S0 = sum |r|^2`, `S1 = sum conj(s) r`, `S2 = sum |s|^2` over one block.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BlockStats {
    pub s0: f64,
    pub s1: Complex64,
    pub s2: f64,
    pub n: usize,
}

impl BlockStats {
    pub fn from_rows<'a>(
        r: impl Iterator<Item = &'a Complex64>,
        s: impl Iterator<Item = &'a Complex64>,
    ) -> Self {
        let mut st = BlockStats::default();
        for (r, s) in r.zip(s) {
            st.s0 += r.norm_sqr();
            st.s1 += s.conj() * r;
            st.s2 += s.norm_sqr();
            st.n += 1;
        }
        st
    }
}

/// Block-averaged SINR of one user:
/// `rho |alpha|^2 mean|s|^2 / mean|r - sqrt(rho) alpha s|^2`, capped at `cap`.
pub fn sinr_from_stats(stats: &BlockStats, alpha_hat: Complex64, rho_d: f64, cap: f64) -> f64 {
    if stats.n == 0 {
        return 0.0;
    }
    let n = stats.n as f64;
    let c = alpha_hat * rho_d.sqrt();
    let signal = c.norm_sqr() * stats.s2 / n;
    let residual = (stats.s0 - 2.0 * (c.conj() * stats.s1).re + c.norm_sqr() * stats.s2) / n;
    if residual <= 0.0 || signal >= cap * residual {
        cap
    } else {
        signal / residual
    }
}

/// Per-user block-averaged SINR of a link sample.
pub fn instantaneous_sinr(link: &LinkSample, alpha_hat: &CVec, rho_d: f64, cap: f64) -> Vec<f64> {
    link.stats()
        .iter()
        .zip(alpha_hat.iter())
        .map(|(st, &a)| sinr_from_stats(st, a, rho_d, cap))
        .collect()
}

/// Running mean and variance of the effective gains over Monte-Carlo draws.
#[derive(Debug, Clone)]
pub struct GainStatistics {
    sum: CVec,
    sum_sq: Vec<f64>,
    count: usize,
}

impl GainStatistics {
    pub fn new(k: usize) -> Self {
        Self {
            sum: CVec::zeros(k),
            sum_sq: vec![0.0; k],
            count: 0,
        }
    }

    pub fn push(&mut self, gains: &CVec) {
        self.sum += gains;
        for (acc, g) in self.sum_sq.iter_mut().zip(gains.iter()) {
            *acc += g.norm_sqr();
        }
        self.count += 1;
    }

    pub fn merge(&mut self, other: &GainStatistics) {
        self.sum += &other.sum;
        for (a, b) in self.sum_sq.iter_mut().zip(&other.sum_sq) {
            *a += b;
        }
        self.count += other.count;
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn mean(&self) -> CVec {
        if self.count == 0 {
            return self.sum.clone();
        }
        &self.sum / Complex64::new(self.count as f64, 0.0)
    }

    /// Per-user `E|g - E g|^2`.
    pub fn variance(&self) -> Vec<f64> {
        let mean = self.mean();
        let n = self.count.max(1) as f64;
        self.sum_sq
            .iter()
            .zip(mean.iter())
            .map(|(s, m)| (s / n - m.norm_sqr()).max(0.0))
            .collect()
    }
}

/// Channel-hardening estimate of `E[beta h_k^T u_k]` from `n_mc` draws
/// produced by `sample`.
pub fn effective_gain(
    k: usize,
    n_mc: usize,
    mut sample: impl FnMut() -> Result<CVec>,
) -> Result<GainStatistics> {
    if n_mc == 0 {
        return Err(NrcError::Parameter("n_mc must be at least 1".into()));
    }
    let mut stats = GainStatistics::new(k);
    for _ in 0..n_mc {
        stats.push(&sample()?);
    }
    Ok(stats)
}
