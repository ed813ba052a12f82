use std::io::Write;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{NrcError, Result};
use crate::precoding::PrecoderKind;

use super::config::{ScenarioConfig, Scheme};
use super::metrics::MetricsRecord;
use super::runner::{RunLabel, run_scenario_for};

/// Parameters a sweep can vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SweepParam {
    RhoD,
    SigmaM2Db,
    K,
    D,
    Iters,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::RhoD => "rho_d",
            SweepParam::SigmaM2Db => "sigma_m2_db",
            SweepParam::K => "K",
            SweepParam::D => "D",
            SweepParam::Iters => "iters",
        }
    }

    /// Returns `base` with the parameter set to `value`.
    pub fn apply(self, base: &ScenarioConfig, value: f64) -> Result<ScenarioConfig> {
        let mut cfg = base.clone();
        let count = |v: f64| -> Result<usize> {
            if v >= 1.0 && v.fract() == 0.0 && v.is_finite() {
                Ok(v as usize)
            } else {
                Err(NrcError::Config(format!(
                    "{} needs a positive integer, got {v}",
                    self.name()
                )))
            }
        };
        match self {
            SweepParam::RhoD => cfg.rho_d = value,
            SweepParam::SigmaM2Db => cfg.sigma_m2_db = value,
            SweepParam::K => cfg.k = count(value)?,
            SweepParam::D => cfg.d = Some(value),
            SweepParam::Iters => cfg.iters = count(value)?,
        }
        Ok(cfg)
    }
}

impl FromStr for SweepParam {
    type Err = NrcError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rho_d" => Ok(SweepParam::RhoD),
            "sigma_m2_db" | "sigma_M2_db" => Ok(SweepParam::SigmaM2Db),
            "K" | "k" => Ok(SweepParam::K),
            "D" | "d" => Ok(SweepParam::D),
            "iters" => Ok(SweepParam::Iters),
            other => Err(NrcError::Config(format!(
                "unknown sweep parameter '{other}' (expected rho_d, sigma_m2_db, K, D or iters)"
            ))),
        }
    }
}

/// One curve family: a scheme with an optional fixed sparsity threshold,
/// evaluated for every listed precoder.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub scheme: Scheme,
    pub d: Option<f64>,
    pub precoders: Vec<PrecoderKind>,
}

impl Series {
    pub fn new(scheme: Scheme, precoders: &[PrecoderKind]) -> Self {
        Self {
            scheme,
            d: None,
            precoders: precoders.to_vec(),
        }
    }

    pub fn with_d(mut self, d: f64) -> Self {
        self.d = Some(d);
        self
    }

    pub fn label(&self) -> String {
        match self.d {
            Some(d) => format!("{}(D={})", self.scheme, format_d(d)),
            None => self.scheme.to_string(),
        }
    }
}

fn format_d(d: f64) -> String {
    if (d - std::f64::consts::SQRT_2).abs() < 1e-12 {
        "sqrt2".to_string()
    } else {
        format!("{d}")
    }
}

#[derive(Debug, Clone)]
pub struct SweepPlan {
    pub base: ScenarioConfig,
    pub param: SweepParam,
    pub values: Vec<f64>,
    pub series: Vec<Series>,
}

impl SweepPlan {
    /// Sweep of `param` for the base config's own scheme and precoder.
    pub fn single(base: ScenarioConfig, param: SweepParam, values: Vec<f64>) -> Self {
        let series = vec![Series::new(base.scheme, &[base.precoder])];
        Self {
            base,
            param,
            values,
            series,
        }
    }
}

const BOTH: [PrecoderKind; 2] = [PrecoderKind::Mrt, PrecoderKind::Zf];

fn range(start: f64, stop: f64, step: f64) -> Vec<f64> {
    let n = ((stop - start) / step).round() as usize;
    (0..=n).map(|i| start + step * i as f64).collect()
}

pub const PRESETS: [&str; 6] = ["fig2", "fig5", "fig6", "fig7", "fig8", "fig9"];

/// Experiment presets on top of `base` (normally the default baseline
/// settings; its seed, trial count and block count are kept).
pub fn preset(name: &str, base: &ScenarioConfig) -> Result<SweepPlan> {
    let base = base.clone();
    let proposed = Series::new(Scheme::NrcAwareProposed, &BOTH);
    let baselines = [
        Series::new(Scheme::Argos, &BOTH),
        Series::new(Scheme::NeighborLs, &BOTH),
    ];
    let plan = match name {
        "fig2" => SweepPlan {
            base,
            param: SweepParam::RhoD,
            values: range(-10.0, 20.0, 5.0),
            series: vec![
                Series::new(Scheme::ReciprocalIdeal, &BOTH),
                Series::new(Scheme::NrcBlind, &BOTH),
                Series::new(Scheme::NrcAwarePerfect, &BOTH),
            ],
        },
        "fig5" => SweepPlan {
            base,
            param: SweepParam::SigmaM2Db,
            values: range(-30.0, -10.0, 2.0),
            series: [0.0, 1.0, std::f64::consts::SQRT_2]
                .into_iter()
                .map(|d| proposed.clone().with_d(d))
                .collect(),
        },
        "fig6" => SweepPlan {
            base: ScenarioConfig {
                sigma_f2_db: -15.0,
                sigma_l2_db: -15.0,
                sigma_m2_db: -15.0,
                d: Some(1.0),
                blocks_per_trial: 0,
                ..base
            },
            param: SweepParam::Iters,
            values: range(1.0, 8.0, 1.0),
            series: vec![Series::new(Scheme::NrcAwareProposed, &[PrecoderKind::Zf])],
        },
        "fig7" => SweepPlan {
            base,
            param: SweepParam::K,
            values: range(10.0, 70.0, 10.0),
            series: [vec![proposed], baselines.to_vec()].concat(),
        },
        "fig8" => SweepPlan {
            base,
            param: SweepParam::SigmaM2Db,
            values: range(-30.0, -10.0, 2.0),
            series: [vec![proposed.with_d(1.0)], baselines.to_vec()].concat(),
        },
        "fig9" => SweepPlan {
            base,
            param: SweepParam::RhoD,
            values: range(-10.0, 20.0, 5.0),
            series: [vec![proposed], baselines.to_vec()].concat(),
        },
        other => {
            return Err(NrcError::Config(format!(
                "unknown preset '{other}' (expected one of {})",
                PRESETS.join(", ")
            )));
        }
    };
    Ok(plan)
}

/// One record per (value, series, precoder), in that nesting order.
pub fn run_sweep(plan: &SweepPlan) -> Result<Vec<MetricsRecord>> {
    if plan.values.is_empty() {
        return Err(NrcError::Config("sweep needs at least one value".into()));
    }
    if plan.series.is_empty() {
        return Err(NrcError::Config("sweep needs at least one series".into()));
    }
    let mut out = Vec::new();
    for &value in &plan.values {
        for series in &plan.series {
            let mut cfg = plan.param.apply(&plan.base, value)?;
            cfg.scheme = series.scheme;
            if plan.param != SweepParam::D
                && let Some(d) = series.d
            {
                cfg.d = Some(d);
            }
            if let Some(&first) = series.precoders.first() {
                cfg.precoder = first;
            }
            let label = RunLabel {
                scheme: Some(series.label()),
                param_name: Some(plan.param.name().to_string()),
                param_value: Some(value),
            };
            out.extend(run_scenario_for(&cfg, &series.precoders, &label)?);
        }
    }
    Ok(out)
}

/// Output encodings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = NrcError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(NrcError::Config(format!("unknown output format '{other}'"))),
        }
    }
}

pub fn write_csv<W: Write>(records: &[MetricsRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if records.is_empty() {
        w.write_record(CSV_HEADER)?;
    }
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub const CSV_HEADER: [&str; 10] = [
    "scheme",
    "precoder",
    "param_name",
    "param_value",
    "spectral_efficiency",
    "mse_B",
    "mse_A",
    "mean_log_term",
    "trials",
    "ci_halfwidth",
];

pub fn write_json<W: Write>(records: &[MetricsRecord], mut out: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, records)?;
    writeln!(out)?;
    Ok(())
}

pub fn write_records<W: Write>(
    records: &[MetricsRecord],
    format: OutputFormat,
    out: W,
) -> Result<()> {
    match format {
        OutputFormat::Csv => write_csv(records, out),
        OutputFormat::Json => write_json(records, out),
    }
}
