use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::channel::NrcParams;
use crate::error::{NrcError, Result};
use crate::geometry::ArrayGeometry;
use crate::precoding::{BetaConvention, DEFAULT_SINR_CAP, PrecoderKind};

/// Calibration / mitigation scheme under evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// Same hardware on both links, downlink channel is the exact transpose.
    ReciprocalIdeal,
    /// Precodes on `G^T` and ignores NRC.
    NrcBlind,
    /// NRC-aware precoding with the true `A` and `B`.
    NrcAwarePerfect,
    /// NRC-aware precoding with round-trip estimates of `A` and `B`.
    NrcAwareProposed,
    /// Direct-path calibration against a reference antenna plus downlink pilots.
    Argos,
    /// Neighbour least-squares calibration plus downlink pilots.
    NeighborLs,
}

impl Scheme {
    pub const ALL: [Scheme; 6] = [
        Scheme::ReciprocalIdeal,
        Scheme::NrcBlind,
        Scheme::NrcAwarePerfect,
        Scheme::NrcAwareProposed,
        Scheme::Argos,
        Scheme::NeighborLs,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::ReciprocalIdeal => "reciprocal-ideal",
            Scheme::NrcBlind => "nrc-blind",
            Scheme::NrcAwarePerfect => "nrc-aware-perfect",
            Scheme::NrcAwareProposed => "nrc-aware-proposed",
            Scheme::Argos => "argos",
            Scheme::NeighborLs => "neighbor-ls",
        }
    }

    /// Schemes whose UEs decode with downlink demodulation pilots.
    pub fn uses_downlink_pilots(self) -> bool {
        matches!(self, Scheme::Argos | Scheme::NeighborLs)
    }

    pub fn is_baseline(self) -> bool {
        self.uses_downlink_pilots()
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Scheme {
    type Err = NrcError;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| NrcError::Config(format!("unknown scheme '{s}'")))
    }
}

/// One Monte-Carlo scenario. SNRs and NRC variances are in dB.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub n: usize,
    pub k: usize,
    /// Uplink pilot length, `K` when absent.
    pub tau_u: Option<usize>,
    /// Downlink pilot length for the baseline schemes, `K` when absent.
    pub tau_d: Option<usize>,
    pub t: usize,
    pub rho_u: f64,
    pub rho_d: f64,
    pub rho_tilde_u: f64,
    pub rho_tilde_d: f64,
    pub sigma_f2_db: f64,
    pub sigma_l2_db: f64,
    pub sigma_m2_db: f64,
    /// Sparsity threshold in lambda/2 units; 0 for `K < 20`, else 1 when absent.
    pub d: Option<f64>,
    pub c_sc: usize,
    pub iters: usize,
    pub precoder: PrecoderKind,
    pub scheme: Scheme,
    pub trials: usize,
    /// Coherence intervals per trial. Zero runs the estimation only.
    pub blocks_per_trial: usize,
    pub seed: u64,

    pub array_rows: Option<usize>,
    pub array_cols: Option<usize>,
    pub spacing: f64,
    pub carrier_freq_hz: f64,
    pub z_ref_ohms: f64,
    pub coupling_snr_db: f64,
    /// Pair radius for the neighbour calibrator, lambda/2 units.
    pub neighbor_radius: f64,
    /// Channel draws used for the effective-gain statistic.
    pub n_mc: usize,
    pub beta_convention: BetaConvention,
    pub renormalize_nrc_precoder: bool,
    /// Charge the `2N`-symbol round-trip exchange to every coherence interval.
    pub charge_nrc_overhead: bool,
    /// Subcarriers simulated per coherence interval in the data phase.
    pub data_subcarriers: usize,
    pub sinr_cap: f64,
    pub confidence: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            n: 100,
            k: 20,
            tau_u: None,
            tau_d: None,
            t: 250,
            rho_u: 0.0,
            rho_d: 20.0,
            rho_tilde_u: 0.0,
            rho_tilde_d: 10.0,
            sigma_f2_db: -20.0,
            sigma_l2_db: -20.0,
            sigma_m2_db: -20.0,
            d: None,
            c_sc: 10,
            iters: 4,
            precoder: PrecoderKind::Zf,
            scheme: Scheme::NrcAwareProposed,
            trials: 200,
            blocks_per_trial: 10,
            seed: 1,
            array_rows: None,
            array_cols: None,
            spacing: ArrayGeometry::DEFAULT_SPACING,
            carrier_freq_hz: ArrayGeometry::DEFAULT_CARRIER_HZ,
            z_ref_ohms: crate::channel::DEFAULT_REFERENCE_OHMS,
            coupling_snr_db: crate::baselines::DEFAULT_COUPLING_SNR_DB,
            neighbor_radius: std::f64::consts::SQRT_2,
            n_mc: 2000,
            beta_convention: BetaConvention::PerRealization,
            renormalize_nrc_precoder: false,
            charge_nrc_overhead: false,
            data_subcarriers: 1,
            sinr_cap: DEFAULT_SINR_CAP,
            confidence: 0.95,
        }
    }
}

fn db(v: f64) -> f64 {
    10f64.powf(v / 10.0)
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| NrcError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn tau_u(&self) -> usize {
        self.tau_u.unwrap_or(self.k)
    }

    /// Downlink pilot symbols charged to the scheme.
    pub fn tau_d(&self) -> usize {
        if self.scheme.uses_downlink_pilots() {
            self.tau_d.unwrap_or(self.k)
        } else {
            0
        }
    }

    /// Round-trip symbols charged per coherence interval.
    pub fn nrc_overhead(&self) -> usize {
        if self.charge_nrc_overhead && self.scheme == Scheme::NrcAwareProposed {
            2 * self.n
        } else {
            0
        }
    }

    /// Data symbols per coherence interval.
    pub fn data_symbols(&self) -> usize {
        self.t
            .saturating_sub(self.tau_u() + self.tau_d() + self.nrc_overhead())
    }

    pub fn sparsity_threshold(&self) -> f64 {
        self.d.unwrap_or(if self.k < 20 { 0.0 } else { 1.0 })
    }

    pub fn geometry(&self) -> Result<ArrayGeometry> {
        match (self.array_rows, self.array_cols) {
            (Some(r), Some(c)) => {
                ArrayGeometry::with_carrier(r, c, self.spacing, self.carrier_freq_hz)
            }
            (None, None) => {
                let g = ArrayGeometry::near_square(self.n, self.spacing)?;
                ArrayGeometry::with_carrier(g.rows, g.cols, self.spacing, self.carrier_freq_hz)
            }
            _ => Err(NrcError::Config(
                "array_rows and array_cols must be given together".into(),
            )),
        }
    }

    pub fn nrc_params(&self) -> NrcParams {
        let mut p = NrcParams::from_db(self.sigma_f2_db, self.sigma_l2_db, self.sigma_m2_db);
        p.z_ref = self.z_ref_ohms;
        p
    }

    pub fn rho_u_linear(&self) -> f64 {
        db(self.rho_u)
    }

    pub fn rho_d_linear(&self) -> f64 {
        db(self.rho_d)
    }

    pub fn rho_tilde_u_linear(&self) -> f64 {
        db(self.rho_tilde_u)
    }

    pub fn rho_tilde_d_linear(&self) -> f64 {
        db(self.rho_tilde_d)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(NrcError::Config(msg));
        if self.k == 0 || self.n < self.k {
            return fail(format!("need N >= K >= 1, got N={}, K={}", self.n, self.k));
        }
        if self.tau_u() < self.k {
            return Err(NrcError::PilotBudget(format!(
                "tau_u = {} < K = {}",
                self.tau_u(),
                self.k
            )));
        }
        if self.scheme.uses_downlink_pilots() && self.tau_d() < self.k {
            return Err(NrcError::PilotBudget(format!(
                "tau_d = {} < K = {}",
                self.tau_d(),
                self.k
            )));
        }
        if self.t < self.tau_u() + self.tau_d() + 1 {
            return Err(NrcError::PilotBudget(format!(
                "T = {} leaves no data symbols after tau_u = {} and tau_d = {}",
                self.t,
                self.tau_u(),
                self.tau_d()
            )));
        }
        if self.nrc_overhead() > 0 && self.t < 2 * self.n + self.k {
            return Err(NrcError::PilotBudget(format!(
                "T = {} is shorter than the 2N + K = {} symbols of the round-trip exchange",
                self.t,
                2 * self.n + self.k
            )));
        }
        if self.nrc_overhead() > 0 && self.data_symbols() == 0 {
            return Err(NrcError::PilotBudget(
                "no data symbols left after the round-trip exchange".into(),
            ));
        }
        let finite = [
            ("rho_u", self.rho_u),
            ("rho_d", self.rho_d),
            ("rho_tilde_u", self.rho_tilde_u),
            ("rho_tilde_d", self.rho_tilde_d),
            ("sigma_f2_db", self.sigma_f2_db),
            ("sigma_l2_db", self.sigma_l2_db),
            ("sigma_m2_db", self.sigma_m2_db),
            ("coupling_snr_db", self.coupling_snr_db),
        ];
        for (name, v) in finite {
            if !v.is_finite() {
                return fail(format!("{name} must be finite"));
            }
        }
        if let Some(d) = self.d
            && !(d >= 0.0 && d.is_finite())
        {
            return fail(format!(
                "sparsity threshold d must be non-negative, got {d}"
            ));
        }
        if self.c_sc == 0 || self.iters == 0 || self.trials == 0 {
            return fail("c_sc, iters and trials must all be at least 1".into());
        }
        if self.n_mc == 0 || self.data_subcarriers == 0 {
            return fail("n_mc and data_subcarriers must be at least 1".into());
        }
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            return fail(format!(
                "confidence must lie in (0, 1), got {}",
                self.confidence
            ));
        }
        if !(self.sinr_cap > 0.0) {
            return fail("sinr_cap must be positive".into());
        }
        if !(self.z_ref_ohms > 0.0) || !(self.neighbor_radius > 0.0) {
            return fail("z_ref_ohms and neighbor_radius must be positive".into());
        }
        let geometry = self
            .geometry()
            .map_err(|e| NrcError::Config(e.to_string()))?;
        if geometry.n_antennas() != self.n {
            return fail(format!(
                "array grid {}x{} holds {} antennas, config has N = {}",
                geometry.rows,
                geometry.cols,
                geometry.n_antennas(),
                self.n
            ));
        }
        Ok(())
    }
}
