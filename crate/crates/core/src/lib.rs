//! Channel non-reciprocity (NRC) simulation for TDD massive MIMO.
//!
//! The crate models the hardware-induced mismatch between the effective
//! uplink and downlink channels of a multi-user massive MIMO link, estimates
//! the UE-side and BS-side NRC matrices from a round-trip over-the-air pilot
//! exchange, and evaluates NRC-aware MRT/ZF precoding against two
//! coupling-based calibration baselines.
//!
//! Module map:
//!
//! * [`geometry`] and [`impedance`]: the planar dipole array, its sparsity
//!   supports and the induced-EMF impedance matrix.
//! * [`channel`]: physical channels, frequency-response and coupling
//!   mismatches, and the effective channels `G`, `H`.
//! * [`precoding`]: uplink training, MRT/ZF precoders, the NRC-aware
//!   transform, downlink reception and SINR.
//! * [`estimation`]: round-trip pilots and the alternating least-squares
//!   estimator for `A` and `B`.
//! * [`baselines`]: direct-path and neighbor least-squares calibration.
//! * [`harness`]: scenario configuration, Monte-Carlo orchestration, metrics
//!   and CSV/JSON output.

pub mod baselines;
pub mod channel;
pub mod error;
pub mod estimation;
pub mod geometry;
pub mod harness;
pub mod impedance;
pub mod linalg;
pub mod precoding;

pub use channel::{ChannelSet, NrcParams, NrcRealization};
pub use error::{NrcError, Result};
pub use estimation::{EstimationResult, EstimatorOptions, PilotMatrix, ProcessedObservation};
pub use geometry::{ArrayGeometry, SparsitySupport};
pub use harness::{MetricsRecord, ScenarioConfig, Scheme};
pub use impedance::ImpedanceMatrix;
pub use linalg::{CMat, CVec};
pub use precoding::{LinkSample, Precoder, PrecoderKind};

pub use num_complex::Complex64;
