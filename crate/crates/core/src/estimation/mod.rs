//! Round-trip pilot signaling and the alternating least-squares estimator of
//! the UE-side (`A`) and BS-side (`B`) NRC matrices.
//!
//! With the processed observation `Q = c G^* A G^T B + V`, the estimator
//! starts from `A = I` and alternates a column-wise, support-restricted LS
//! solve for `B` with a closed-form LS solve for the diagonal of `A`. Each
//! subcarrier is estimated separately and the results are averaged.

mod pilot;
mod solver;

pub use pilot::{
    PilotMatrix, ProcessedObservation, gen_pilot_matrix, process_observation, roundtrip,
};
pub use solver::{AStep, BStep, estimate_a_step, estimate_b_step, objective, real_stack};

use nalgebra::DVector;
use num_complex::Complex64;

use crate::error::{NrcError, Result};
use crate::geometry::SparsitySupport;
use crate::linalg::{CMat, CVec, ONE};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EstimatorOptions {
    pub iters: usize,
    /// Evaluate the Frobenius objective after every half-step.
    pub record_objective: bool,
    /// Keep the subcarrier-averaged estimates after every round.
    pub record_history: bool,
}

impl Default for EstimatorOptions {
    fn default() -> Self {
        Self {
            iters: 4,
            record_objective: true,
            record_history: false,
        }
    }
}

/// Subcarrier-averaged estimates after one round of alternation.
#[derive(Debug, Clone)]
pub struct RoundEstimate {
    pub a_hat: CVec,
    pub b_hat: CMat,
}

#[derive(Debug, Clone)]
pub struct EstimationResult {
    /// Diagonal of the averaged UE-side estimate (the vector `xi`).
    pub a_hat: CVec,
    pub b_hat: CMat,
    /// `[Re xi; Im xi]` of the averaged estimate.
    pub psi_hat: DVector<f64>,
    /// Per subcarrier: the objective after each B and each A half-step.
    pub objective_trace: Vec<Vec<f64>>,
    pub iterations: usize,
    /// Averaged estimates after rounds `1..=iterations` when requested.
    pub history: Vec<RoundEstimate>,
    /// Count of B columns that fell back to a minimum-norm solution.
    pub rank_deficient_columns: usize,
}

impl EstimationResult {
    pub fn a_matrix(&self) -> CMat {
        CMat::from_diagonal(&self.a_hat)
    }
}

struct SubcarrierRun {
    rounds: Vec<(CVec, CMat)>,
    trace: Vec<f64>,
    rank_deficient: usize,
}

fn estimate_subcarrier(
    obs: &ProcessedObservation,
    g_hat: &CMat,
    support: &SparsitySupport,
    options: &EstimatorOptions,
) -> Result<SubcarrierRun> {
    let gain = obs.gain();
    let mut a_hat = CVec::from_element(g_hat.ncols(), ONE);
    let mut b_hat = CMat::zeros(0, 0);
    let mut rounds = Vec::new();
    let mut trace = Vec::new();
    let mut rank_deficient = 0;
    for _ in 0..options.iters {
        let b = estimate_b_step(&obs.q, g_hat, &a_hat, support, gain)?;
        rank_deficient += b.rank_deficient.len();
        b_hat = b.b_hat;
        if options.record_objective {
            trace.push(objective(&obs.q, g_hat, &a_hat, &b_hat, gain));
        }
        a_hat = estimate_a_step(&obs.q, g_hat, &b_hat, gain)?.xi;
        if options.record_objective {
            trace.push(objective(&obs.q, g_hat, &a_hat, &b_hat, gain));
        }
        if options.record_history {
            rounds.push((a_hat.clone(), b_hat.clone()));
        }
    }
    if !options.record_history {
        rounds.push((a_hat, b_hat));
    }
    Ok(SubcarrierRun {
        rounds,
        trace,
        rank_deficient,
    })
}

/// Runs the alternating estimator on every subcarrier and averages the
/// per-subcarrier estimates.
pub fn iterate_estimate(
    observations: &[ProcessedObservation],
    g_hats: &[CMat],
    support: &SparsitySupport,
    options: &EstimatorOptions,
) -> Result<EstimationResult> {
    if options.iters == 0 {
        return Err(NrcError::Parameter(
            "estimation needs at least one iteration".into(),
        ));
    }
    if observations.is_empty() || observations.len() != g_hats.len() {
        return Err(NrcError::Dimension(format!(
            "{} observations for {} channel estimates",
            observations.len(),
            g_hats.len()
        )));
    }
    let runs = observations
        .iter()
        .zip(g_hats)
        .map(|(obs, g)| estimate_subcarrier(obs, g, support, options))
        .collect::<Result<Vec<_>>>()?;

    let scale = Complex64::new(1.0 / runs.len() as f64, 0.0);
    let n_rounds = runs[0].rounds.len();
    let mut averaged: Vec<RoundEstimate> = (0..n_rounds)
        .map(|r| {
            let mut a = runs[0].rounds[r].0.clone();
            let mut b = runs[0].rounds[r].1.clone();
            for run in &runs[1..] {
                a += &run.rounds[r].0;
                b += &run.rounds[r].1;
            }
            RoundEstimate {
                a_hat: a * scale,
                b_hat: b * scale,
            }
        })
        .collect();
    let last = averaged.last().cloned().expect("at least one round");
    if !options.record_history {
        averaged.clear();
    }
    let k = last.a_hat.len();
    let psi_hat = DVector::from_fn(2 * k, |i, _| {
        if i < k {
            last.a_hat[i].re
        } else {
            last.a_hat[i - k].im
        }
    });
    Ok(EstimationResult {
        a_hat: last.a_hat,
        b_hat: last.b_hat,
        psi_hat,
        objective_trace: runs.iter().map(|r| r.trace.clone()).collect(),
        iterations: options.iters,
        history: averaged,
        rank_deficient_columns: runs.iter().map(|r| r.rank_deficient).sum(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{complex_normal_matrix, relative_frob_error};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn noiseless_obs(g: &CMat, a: &CVec, b: &CMat, gain: f64) -> ProcessedObservation {
        let q =
            g.conjugate() * CMat::from_diagonal(a) * g.transpose() * b * Complex64::new(gain, 0.0);
        ProcessedObservation {
            q,
            rho_tilde_u: gain,
            rho_tilde_d: gain,
            subcarrier_index: 0,
        }
    }

    #[test]
    fn single_subcarrier_matches_direct_run() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = complex_normal_matrix(6, 3, 1.0, &mut rng);
        let mut obs = noiseless_obs(&g, &CVec::from_element(3, ONE), &CMat::identity(6, 6), 1.0);
        obs.q += complex_normal_matrix(6, 6, 0.01, &mut rng);
        let support = SparsitySupport::full(6);
        let opts = EstimatorOptions::default();
        let res = iterate_estimate(
            std::slice::from_ref(&obs),
            std::slice::from_ref(&g),
            &support,
            &opts,
        )
        .unwrap();
        let run = estimate_subcarrier(&obs, &g, &support, &opts).unwrap();
        assert_eq!(res.a_hat, run.rounds[0].0);
        assert_eq!(res.b_hat, run.rounds[0].1);
        assert_eq!(res.objective_trace[0].len(), 8);
    }

    #[test]
    fn history_tracks_every_round() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let g = complex_normal_matrix(5, 3, 1.0, &mut rng);
        let a = CVec::from_fn(3, |i, _| Complex64::new(1.0 + 0.1 * i as f64, 0.05));
        let obs = noiseless_obs(&g, &a, &CMat::identity(5, 5), 2.0);
        let opts = EstimatorOptions {
            iters: 3,
            record_objective: false,
            record_history: true,
        };
        let res = iterate_estimate(&[obs], &[g], &SparsitySupport::diagonal(5), &opts).unwrap();
        assert_eq!(res.history.len(), 3);
        assert_eq!(res.history[2].a_hat, res.a_hat);
        assert!(res.objective_trace[0].is_empty());
        assert_eq!(res.psi_hat[3], res.a_hat[0].im);
    }

    #[test]
    fn noiseless_exact_inputs_reach_zero_objective() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let g = complex_normal_matrix(8, 4, 1.0, &mut rng);
        let a = CVec::from_fn(4, |i, _| Complex64::new(1.0, 0.1 * i as f64));
        let b = CMat::from_diagonal(&CVec::from_fn(8, |i, _| {
            Complex64::new(1.0 - 0.02 * i as f64, 0.03)
        }));
        let obs = noiseless_obs(&g, &a, &b, 3.0);
        let opts = EstimatorOptions {
            iters: 30,
            ..EstimatorOptions::default()
        };
        let res = iterate_estimate(
            std::slice::from_ref(&obs),
            &[g],
            &SparsitySupport::diagonal(8),
            &opts,
        )
        .unwrap();
        let last = *res.objective_trace[0].last().unwrap();
        assert!(last <= 1e-16 * crate::linalg::frob_sq(&obs.q), "{last}");
        // the product is identified only up to a common scale
        let scale = b[(0, 0)] / res.b_hat[(0, 0)];
        assert!(relative_frob_error(&b, &(&res.b_hat * scale)) < 1e-8);
    }

    #[test]
    fn rejects_bad_inputs() {
        let support = SparsitySupport::diagonal(2);
        let opts = EstimatorOptions {
            iters: 0,
            ..EstimatorOptions::default()
        };
        assert!(iterate_estimate(&[], &[], &support, &EstimatorOptions::default()).is_err());
        let g = CMat::identity(2, 2);
        let obs = noiseless_obs(&g, &CVec::from_element(2, ONE), &g, 1.0);
        assert!(iterate_estimate(&[obs], &[g], &support, &opts).is_err());
    }
}
