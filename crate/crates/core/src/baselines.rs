//! Coupling-based BS calibration baselines and their downlink-pilot UE CSI.
//!
//! Both calibrators observe the over-the-air coupling channel between pairs of
//! BS antennas in each direction and return a diagonal `B` estimate normalized
//! so that antenna 0 has coefficient 1.

use std::collections::VecDeque;

use num_complex::Complex64;
use rand::Rng;

use crate::channel::NrcRealization;
use crate::error::{NrcError, Result};
use crate::geometry::ArrayGeometry;
use crate::impedance::ImpedanceMatrix;
use crate::linalg::{CMat, CVec, ONE, complex_normal, db_to_linear, inverse};
use crate::precoding::{Precoder, effective_gains};

/// Default SNR of the strongest inter-antenna coupling link.
pub const DEFAULT_COUPLING_SNR_DB: f64 = 80.0;

/// Forward observations below this magnitude are treated as lost.
const MIN_OBSERVATION: f64 = 1e-12;

/// Normalized over-the-air coupling channel between BS antennas, scaled so
/// the strongest pair has unit gain.
#[derive(Debug, Clone)]
pub struct CouplingChannel {
    c: CMat,
}

impl CouplingChannel {
    pub fn from_impedance(impedance: &ImpedanceMatrix) -> Result<Self> {
        let peak = impedance.max_mutual_magnitude();
        if !(peak > 0.0) {
            return Err(NrcError::Parameter(
                "array has no mutual coupling to measure".into(),
            ));
        }
        let mut c = impedance.matrix() / Complex64::new(peak, 0.0);
        c.fill_diagonal(Complex64::new(0.0, 0.0));
        Ok(Self { c })
    }

    pub fn matrix(&self) -> &CMat {
        &self.c
    }
}

/// Antenna `i` transmits to `j` (`forward`) and `j` transmits back to `i`
/// (`reverse`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairObservation {
    pub i: usize,
    pub j: usize,
    pub forward: Complex64,
    pub reverse: Complex64,
}

#[derive(Debug, Clone)]
pub struct CouplingMeasurement {
    pub pairs: Vec<PairObservation>,
    pub coupling_snr_db: f64,
}

/// Measures every pair in `pairs` through the BS front ends:
/// `i -> j` observes `sqrt(snr) [E_r C E_t]_{ji}` plus unit-variance noise.
/// No RNG means noiseless observations.
pub fn measure_coupling<R: Rng + ?Sized>(
    channel: &CouplingChannel,
    nrc: &NrcRealization,
    pairs: &[(usize, usize)],
    coupling_snr_db: f64,
    mut rng: Option<&mut R>,
) -> Result<CouplingMeasurement> {
    let n = nrc.n_antennas();
    if channel.c.nrows() != n {
        return Err(NrcError::Dimension(format!(
            "coupling channel has {} antennas, NRC realization has {n}",
            channel.c.nrows()
        )));
    }
    let amp = db_to_linear(coupling_snr_db).sqrt();
    let link = &nrc.e_r * &channel.c * &nrc.e_t;
    let mut noise = || match rng.as_deref_mut() {
        Some(r) => complex_normal(r, 1.0),
        None => Complex64::new(0.0, 0.0),
    };
    let mut out = Vec::with_capacity(pairs.len());
    for &(i, j) in pairs {
        if i >= n || j >= n || i == j {
            return Err(NrcError::Dimension(format!(
                "invalid antenna pair ({i}, {j})"
            )));
        }
        let forward = link[(j, i)] * amp + noise();
        let reverse = link[(i, j)] * amp + noise();
        out.push(PairObservation {
            i,
            j,
            forward,
            reverse,
        });
    }
    Ok(CouplingMeasurement {
        pairs: out,
        coupling_snr_db,
    })
}

/// Star pairs `(0, i)` for the direct-path calibrator.
pub fn star_pairs(n: usize) -> Vec<(usize, usize)> {
    (1..n).map(|i| (0, i)).collect()
}

/// Diagonal calibration estimate plus antennas that could not be calibrated.
#[derive(Debug, Clone)]
pub struct Calibration {
    pub b_hat: CMat,
    pub excluded: Vec<usize>,
}

/// Direct-path calibration against antenna 0: `b_i = reverse / forward`.
/// Antennas with a lost forward observation keep coefficient 1 and are
/// reported as excluded.
pub fn argos_calibrate(measurement: &CouplingMeasurement, n: usize) -> Result<Calibration> {
    let mut b = CVec::from_element(n, ONE);
    let mut seen = vec![false; n];
    seen[0] = true;
    let mut excluded = Vec::new();
    for p in &measurement.pairs {
        if p.i != 0 {
            continue;
        }
        if p.forward.norm() < MIN_OBSERVATION {
            excluded.push(p.j);
        } else {
            b[p.j] = p.reverse / p.forward;
        }
        seen[p.j] = true;
    }
    excluded.extend((0..n).filter(|&i| !seen[i]));
    excluded.sort_unstable();
    excluded.dedup();
    Ok(Calibration {
        b_hat: CMat::from_diagonal(&b),
        excluded,
    })
}

/// Joint least squares over all neighbour pairs:
/// `min sum |b_j forward_ij - b_i reverse_ij|^2` with `b_0 = 1`.
pub fn neighbor_ls_calibrate(measurement: &CouplingMeasurement, n: usize) -> Result<Calibration> {
    check_connected(measurement, n)?;
    if n == 1 {
        return Ok(Calibration {
            b_hat: CMat::identity(1, 1),
            excluded: Vec::new(),
        });
    }
    // unknowns b_1..b_{n-1}; build the normal equations directly
    let m = n - 1;
    let mut normal = CMat::zeros(m, m);
    let mut rhs = CVec::zeros(m);
    for p in &measurement.pairs {
        // row: coef_j b_j + coef_i b_i = 0
        let terms = [(p.j, p.forward), (p.i, -p.reverse)];
        let mut row: Vec<(usize, Complex64)> = Vec::with_capacity(2);
        let mut constant = Complex64::new(0.0, 0.0);
        for (idx, coef) in terms {
            if idx == 0 {
                constant += coef;
            } else {
                row.push((idx - 1, coef));
            }
        }
        for &(a, ca) in &row {
            for &(b, cb) in &row {
                normal[(a, b)] += ca.conj() * cb;
            }
            rhs[a] -= ca.conj() * constant;
        }
    }
    let solution = match normal.clone().cholesky() {
        Some(chol) => chol.solve(&rhs),
        None => inverse(&normal, "neighbor LS normal equations")? * rhs,
    };
    let mut b = CVec::from_element(n, ONE);
    for i in 0..m {
        b[i + 1] = solution[i];
    }
    Ok(Calibration {
        b_hat: CMat::from_diagonal(&b),
        excluded: Vec::new(),
    })
}

fn check_connected(measurement: &CouplingMeasurement, n: usize) -> Result<()> {
    let mut adj = vec![Vec::new(); n];
    for p in &measurement.pairs {
        adj[p.i].push(p.j);
        adj[p.j].push(p.i);
    }
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([0usize]);
    seen[0] = true;
    while let Some(v) = queue.pop_front() {
        for &w in &adj[v] {
            if !seen[w] {
                seen[w] = true;
                queue.push_back(w);
            }
        }
    }
    match seen.iter().position(|s| !s) {
        Some(i) => Err(NrcError::Disconnected(i)),
        None => Ok(()),
    }
}

/// Neighbour pairs within `radius` (in lambda/2 units) on the array grid.
pub fn neighbor_pairs(geometry: &ArrayGeometry, radius: f64) -> Vec<(usize, usize)> {
    geometry.pairs_within(radius)
}

/// Gaussian prior on a user's effective gain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainPrior {
    pub mean: Complex64,
    pub variance: f64,
}

/// Received downlink pilot `sqrt(rho_d tau_d) alpha + CN(0, 1)` after
/// despreading `tau_d` orthogonal pilot symbols.
pub fn pilot_observation<R: Rng + ?Sized>(
    alpha: Complex64,
    rho_d: f64,
    tau_d: usize,
    rng: &mut R,
) -> Complex64 {
    alpha * (rho_d * tau_d as f64).sqrt() + complex_normal(rng, 1.0)
}

/// Scalar LMMSE estimate of `alpha` from one despread pilot observation.
pub fn lmmse_gain_estimate(
    observation: Complex64,
    prior: &GainPrior,
    rho_d: f64,
    tau_d: usize,
) -> Complex64 {
    let snr = rho_d * tau_d as f64;
    let amp = snr.sqrt();
    let weight = amp * prior.variance / (snr * prior.variance + 1.0);
    prior.mean + (observation - prior.mean * amp) * weight
}

/// Per-user LMMSE estimates of `beta h_k^T u_k` from `tau_d` beamformed
/// downlink pilots. No RNG means noiseless pilots, which return the true
/// gains.
pub fn dl_pilot_csi<R: Rng + ?Sized>(
    h: &CMat,
    precoder: &Precoder,
    tau_d: usize,
    rho_d: f64,
    priors: &[GainPrior],
    rng: Option<&mut R>,
) -> Result<CVec> {
    let k = h.nrows();
    if tau_d < k {
        return Err(NrcError::PilotBudget(format!("tau_d = {tau_d} < K = {k}")));
    }
    if priors.len() != k {
        return Err(NrcError::Dimension(format!(
            "{} gain priors for {k} users",
            priors.len()
        )));
    }
    let alpha = effective_gains(h, precoder)?;
    let Some(rng) = rng else {
        return Ok(alpha);
    };
    Ok(CVec::from_fn(k, |i, _| {
        let y = pilot_observation(alpha[i], rho_d, tau_d, rng);
        lmmse_gain_estimate(y, &priors[i], rho_d, tau_d)
    }))
}
