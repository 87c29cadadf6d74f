//! Behavioral model and metrology bench for a 12-bit, 110 MS/s pipelined ADC.
//!
//! The converter chain is ten 1.5-bit stages followed by a 2-bit flash, with
//! digital redundancy correction producing 12-bit output codes. The model
//! covers the dominant silicon non-idealities at the behavioral level:
//! front-end switch nonlinearity, per-stage kT/C noise, sampling-clock
//! aperture jitter, incomplete residue settling tied to the switched-capacitor
//! bias generator, and comparator offsets.
//!
//! The [`metrics`] module computes the standard dynamic-test figures
//! (SNR/SNDR/SFDR/THD/ENOB from a coherent FFT, DNL/INL from a sine-wave
//! histogram) and the area-adjusted figure of merit. The [`harness`] module
//! drives full runs, rate/frequency sweeps, and calibration of the noise and
//! distortion knobs against measured targets.

pub mod bias;
pub mod correction;
pub mod harness;
pub mod metrics;
pub mod pipeline;
pub mod signals;

pub use harness::{MetricsReport, RunSpec, SweepRow, SweepSource, SweepTable};
pub use pipeline::{AdcConfig, FrontEndConfig, RawCodeFrame, StageConfig};
pub use signals::{SampleStream, StimulusKind, StimulusSpec};

/// Errors surfaced by any module in the chain.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("signals: {0}")]
    InvalidStimulus(String),
    #[error("signals: no coherent bin")]
    NoCoherentBin,
    #[error("signals: target frequency {0} Hz is not below Nyquist")]
    AboveNyquist(f64),
    #[error("metrics: record length {0} is not a power of two")]
    NotPowerOfTwo(usize),
    #[error("metrics: no signal")]
    NoSignal,
    #[error("bias: {0}")]
    InvalidBias(String),
    #[error("harness: calibration bracket [{lo}, {hi}] does not straddle target {target} (metric {metric_lo} .. {metric_hi})")]
    NonBracketing {
        lo: f64,
        hi: f64,
        target: f64,
        metric_lo: f64,
        metric_hi: f64,
    },
    #[error("harness: {0}")]
    InvalidRunSpec(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("config: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
