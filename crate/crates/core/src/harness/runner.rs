use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::baselines::{
    CouplingChannel, GainPrior, argos_calibrate, lmmse_gain_estimate, measure_coupling,
    neighbor_ls_calibrate, pilot_observation, star_pairs,
};
use crate::channel::{NrcRealization, assemble_channels, gen_physical_channel};
use crate::error::Result;
use crate::estimation::{
    EstimatorOptions, PilotMatrix, gen_pilot_matrix, iterate_estimate, process_observation,
    roundtrip,
};
use crate::geometry::SparsitySupport;
use crate::impedance::ImpedanceMatrix;
use crate::linalg::{CMat, CVec};
use crate::precoding::{
    BetaConvention, BlockStats, GainStatistics, Precoder, PrecoderKind, dl_transmit_receive,
    effective_gains, ensemble_beta, make_precoder, nrc_aware, qpsk_symbols, sinr_from_stats,
    ul_train_and_estimate,
};

use super::config::{ScenarioConfig, Scheme};
use super::metrics::{
    MetricsRecord, mean_and_halfwidth, normalized_mse_bs, normalized_mse_ue, prefactor,
};

/// Independent random streams of one trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Purpose {
    Nrc = 0,
    Pilot = 1,
    Calibration = 2,
    Data = 3,
    Coupling = 4,
}

/// Deterministic stream for `(trial, purpose, sub)` under `seed`. Every
/// scheme and precoder sees the same streams, so comparisons use common
/// random numbers.
pub fn stream_rng(seed: u64, trial: usize, purpose: Purpose, sub: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((trial as u64) << 24) | ((purpose as u64) << 20) | (sub as u64 & 0xF_FFFF));
    rng
}

enum Compensation {
    None,
    Full { a: CVec, b: CMat },
    BsOnly { b: CMat },
}

struct Context<'a> {
    cfg: &'a ScenarioConfig,
    impedance: ImpedanceMatrix,
    support: SparsitySupport,
    pilot: Option<PilotMatrix>,
    coupling: Option<(CouplingChannel, Vec<(usize, usize)>)>,
}

impl<'a> Context<'a> {
    fn new(cfg: &'a ScenarioConfig) -> Result<Self> {
        cfg.validate()?;
        let geometry = cfg.geometry()?;
        let impedance = ImpedanceMatrix::from_geometry(&geometry)?;
        let support = SparsitySupport::new(&geometry, cfg.sparsity_threshold())?;
        let pilot = match cfg.scheme {
            Scheme::NrcAwareProposed => Some(gen_pilot_matrix(cfg.n)?),
            _ => None,
        };
        let coupling = match cfg.scheme {
            Scheme::Argos => Some((
                CouplingChannel::from_impedance(&impedance)?,
                star_pairs(cfg.n),
            )),
            Scheme::NeighborLs => Some((
                CouplingChannel::from_impedance(&impedance)?,
                geometry.pairs_within(cfg.neighbor_radius),
            )),
            _ => None,
        };
        Ok(Self {
            cfg,
            impedance,
            support,
            pilot,
            coupling,
        })
    }

    /// Channels and precoder for one coherence interval. Draws `P` and the
    /// uplink training noise from `rng`.
    fn realize(
        &self,
        nrc: &NrcRealization,
        kind: PrecoderKind,
        comp: &Compensation,
        rng: &mut ChaCha8Rng,
    ) -> Result<(CMat, Precoder)> {
        let cfg = self.cfg;
        let p = gen_physical_channel(cfg.n, cfg.k, rng)?;
        let set = assemble_channels(&p, nrc, 0)?;
        let h = if cfg.scheme == Scheme::ReciprocalIdeal {
            set.g.transpose()
        } else {
            set.h
        };
        let g_hat = ul_train_and_estimate(&set.g, cfg.rho_u_linear(), cfg.tau_u(), rng)?;
        let base = make_precoder(&g_hat.transpose(), kind)?;
        let renorm = cfg.renormalize_nrc_precoder;
        let precoder = match comp {
            Compensation::None => base,
            Compensation::Full { a, b } => nrc_aware(&base, Some(a), b, renorm)?,
            Compensation::BsOnly { b } => nrc_aware(&base, None, b, renorm)?,
        };
        Ok((h, precoder))
    }
}

struct BlockRecord {
    stats: Vec<BlockStats>,
    pilot_obs: Option<Vec<num_complex::Complex64>>,
}

struct PrecoderTrial {
    calibration: GainStatistics,
    blocks: Vec<BlockRecord>,
}

struct TrialOutput {
    mse_b: Option<f64>,
    mse_a: Option<f64>,
    per_precoder: Vec<PrecoderTrial>,
}

fn estimate_compensation(
    ctx: &Context,
    nrc: &NrcRealization,
    trial: usize,
) -> Result<(Compensation, Option<f64>, Option<f64>)> {
    let cfg = ctx.cfg;
    match cfg.scheme {
        Scheme::ReciprocalIdeal | Scheme::NrcBlind => Ok((Compensation::None, None, None)),
        Scheme::NrcAwarePerfect => Ok((
            Compensation::Full {
                a: nrc.a.clone(),
                b: nrc.b.clone(),
            },
            Some(0.0),
            Some(0.0),
        )),
        Scheme::NrcAwareProposed => {
            let pilot = ctx
                .pilot
                .as_ref()
                .expect("pilot matrix built for the proposed scheme");
            let (rtu, rtd) = (cfg.rho_tilde_u_linear(), cfg.rho_tilde_d_linear());
            let mut observations = Vec::with_capacity(cfg.c_sc);
            let mut g_hats = Vec::with_capacity(cfg.c_sc);
            for l in 0..cfg.c_sc {
                let mut rng = stream_rng(cfg.seed, trial, Purpose::Pilot, l);
                let p = gen_physical_channel(cfg.n, cfg.k, &mut rng)?;
                let set = assemble_channels(&p, nrc, l)?;
                let g_hat =
                    ul_train_and_estimate(&set.g, cfg.rho_u_linear(), cfg.tau_u(), &mut rng)?;
                let y = roundtrip(&set.g, &set.h, pilot, rtd, rtu, Some(&mut rng))?;
                observations.push(process_observation(&y, pilot, rtu, rtd, l)?);
                g_hats.push(g_hat);
            }
            let options = EstimatorOptions {
                iters: cfg.iters,
                record_objective: false,
                record_history: false,
            };
            let est = iterate_estimate(&observations, &g_hats, &ctx.support, &options)?;
            let mse_b = normalized_mse_bs(&nrc.b, &est.b_hat)?;
            let mse_a = normalized_mse_ue(&nrc.a, &est.a_hat)?;
            Ok((
                Compensation::Full {
                    a: est.a_hat,
                    b: est.b_hat,
                },
                Some(mse_b),
                Some(mse_a),
            ))
        }
        Scheme::Argos | Scheme::NeighborLs => {
            let (channel, pairs) = ctx
                .coupling
                .as_ref()
                .expect("coupling channel built for baselines");
            let mut rng = stream_rng(cfg.seed, trial, Purpose::Coupling, 0);
            let m = measure_coupling(channel, nrc, pairs, cfg.coupling_snr_db, Some(&mut rng))?;
            let cal = if cfg.scheme == Scheme::Argos {
                argos_calibrate(&m, cfg.n)?
            } else {
                neighbor_ls_calibrate(&m, cfg.n)?
            };
            // estimates are anchored at b_0 = 1; compare after restoring the true anchor
            let anchored = &cal.b_hat * nrc.b[(0, 0)];
            let mse_b = normalized_mse_bs(&nrc.b, &anchored)?;
            Ok((Compensation::BsOnly { b: cal.b_hat }, Some(mse_b), None))
        }
    }
}

fn run_trial(ctx: &Context, trial: usize, precoders: &[PrecoderKind]) -> Result<TrialOutput> {
    let cfg = ctx.cfg;
    let mut rng = stream_rng(cfg.seed, trial, Purpose::Nrc, 0);
    let nrc = NrcRealization::draw(&cfg.nrc_params(), &ctx.impedance, cfg.k, &mut rng)?;
    let (comp, mse_b, mse_a) = estimate_compensation(ctx, &nrc, trial)?;

    let mut per_precoder = Vec::new();
    if cfg.blocks_per_trial > 0 {
        let n_cal = cfg.n_mc.div_ceil(cfg.trials);
        let n_data = cfg.blocks_per_trial * cfg.data_subcarriers;
        for &kind in precoders {
            let mut cal = Vec::with_capacity(n_cal);
            for i in 0..n_cal {
                let mut rng = stream_rng(cfg.seed, trial, Purpose::Calibration, i);
                cal.push(ctx.realize(&nrc, kind, &comp, &mut rng)?);
            }
            let mut data = Vec::with_capacity(n_data);
            for b in 0..n_data {
                let mut rng = stream_rng(cfg.seed, trial, Purpose::Data, b);
                let (h, p) = ctx.realize(&nrc, kind, &comp, &mut rng)?;
                data.push((h, p, rng));
            }
            if cfg.beta_convention == BetaConvention::Ensemble {
                let beta =
                    ensemble_beta(cal.iter().map(|c| &c.1).chain(data.iter().map(|d| &d.1)))?;
                cal.iter_mut().for_each(|c| c.1.beta = beta);
                data.iter_mut().for_each(|d| d.1.beta = beta);
            }

            let mut calibration = GainStatistics::new(cfg.k);
            for (h, p) in &cal {
                calibration.push(&effective_gains(h, p)?);
            }
            let rho_d = cfg.rho_d_linear();
            let zeros = CVec::zeros(cfg.k);
            let mut blocks = Vec::with_capacity(n_data);
            for (h, p, mut rng) in data {
                let s = qpsk_symbols(cfg.k, cfg.data_symbols(), &mut rng);
                let link = dl_transmit_receive(&h, &p, &s, rho_d, &zeros, Some(&mut rng))?;
                let pilot_obs = if cfg.scheme.uses_downlink_pilots() {
                    let alpha = effective_gains(&h, &p)?;
                    Some(
                        alpha
                            .iter()
                            .map(|&a| pilot_observation(a, rho_d, cfg.tau_d(), &mut rng))
                            .collect(),
                    )
                } else {
                    None
                };
                blocks.push(BlockRecord {
                    stats: link.stats(),
                    pilot_obs,
                });
            }
            per_precoder.push(PrecoderTrial {
                calibration,
                blocks,
            });
        }
    }
    Ok(TrialOutput {
        mse_b,
        mse_a,
        per_precoder,
    })
}

/// Axis information attached to every record of a run.
#[derive(Debug, Clone, Default)]
pub struct RunLabel {
    pub scheme: Option<String>,
    pub param_name: Option<String>,
    pub param_value: Option<f64>,
}

/// Runs `cfg` once per precoder in `precoders`, sharing the NRC draws and
/// estimation across them.
pub fn run_scenario_for(
    cfg: &ScenarioConfig,
    precoders: &[PrecoderKind],
    label: &RunLabel,
) -> Result<Vec<MetricsRecord>> {
    let ctx = Context::new(cfg)?;
    let trials = (0..cfg.trials)
        .into_par_iter()
        .map(|t| run_trial(&ctx, t, precoders))
        .collect::<Result<Vec<_>>>()?;

    let mean_of = |vals: Vec<f64>| -> Option<f64> {
        if vals.is_empty() {
            None
        } else {
            Some(vals.iter().sum::<f64>() / vals.len() as f64)
        }
    };
    let mse_b = mean_of(trials.iter().filter_map(|t| t.mse_b).collect());
    let mse_a = mean_of(trials.iter().filter_map(|t| t.mse_a).collect());
    let scheme = label
        .scheme
        .clone()
        .unwrap_or_else(|| cfg.scheme.to_string());
    let pre = prefactor(cfg.t, cfg.tau_u() + cfg.tau_d() + cfg.nrc_overhead())?;
    let k = cfg.k as f64;

    let mut records = Vec::with_capacity(precoders.len());
    for (pi, &kind) in precoders.iter().enumerate() {
        let (spectral_efficiency, mean_log_term, ci_halfwidth) = if cfg.blocks_per_trial == 0 {
            (None, None, None)
        } else {
            let logs = trial_log_terms(cfg, &trials, pi);
            let (mean, half) = mean_and_halfwidth(&logs, cfg.confidence);
            (Some(k * pre * mean), Some(mean), Some(k * pre * half))
        };
        records.push(MetricsRecord {
            scheme: scheme.clone(),
            precoder: kind.to_string(),
            param_name: label.param_name.clone(),
            param_value: label.param_value,
            spectral_efficiency,
            mse_b,
            mse_a,
            mean_log_term,
            trials: cfg.trials,
            ci_halfwidth,
        });
    }
    Ok(records)
}

/// Per-trial mean of `log2(1 + SINR)` for precoder index `pi`.
fn trial_log_terms(cfg: &ScenarioConfig, trials: &[TrialOutput], pi: usize) -> Vec<f64> {
    let mut calibration = GainStatistics::new(cfg.k);
    for t in trials {
        calibration.merge(&t.per_precoder[pi].calibration);
    }
    let mean = calibration.mean();
    let var = calibration.variance();
    let priors: Vec<GainPrior> = (0..cfg.k)
        .map(|k| GainPrior {
            mean: mean[k],
            variance: var[k],
        })
        .collect();
    let rho_d = cfg.rho_d_linear();
    trials
        .iter()
        .map(|t| {
            let blocks = &t.per_precoder[pi].blocks;
            let mut acc = 0.0;
            let mut count = 0usize;
            for b in blocks {
                for (k, st) in b.stats.iter().enumerate() {
                    let alpha = match &b.pilot_obs {
                        Some(obs) => lmmse_gain_estimate(obs[k], &priors[k], rho_d, cfg.tau_d()),
                        None => mean[k],
                    };
                    acc += (1.0 + sinr_from_stats(st, alpha, rho_d, cfg.sinr_cap)).log2();
                    count += 1;
                }
            }
            acc / count as f64
        })
        .collect()
}

/// Runs `cfg` with its own precoder.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<Vec<MetricsRecord>> {
    run_scenario_for(cfg, &[cfg.precoder], &RunLabel::default())
}
