//! Deterministic stimulus generation: coherently-sampled sines with optional
//! aperture jitter, and ramps for static-linearity runs.
//!
//! Differential signals are collapsed to one signed scalar (the V_inp - V_inn
//! value); amplitude 1.0 corresponds to a 2 V peak-to-peak full-scale input.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StimulusKind {
    Sine,
    Ramp,
}

/// Full description of a test stimulus.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StimulusSpec {
    pub kind: StimulusKind,
    /// Differential half-swing in volts; 1.0 means 2 V peak-to-peak.
    pub amplitude: f64,
    pub frequency_hz: f64,
    pub phase_rad: f64,
    pub dc_offset: f64,
    pub n_samples: usize,
    /// RMS sampling-instant error in seconds.
    pub jitter_sigma: f64,
    pub rng_seed: u64,
}

impl StimulusSpec {
    pub fn sine(frequency_hz: f64, amplitude: f64, n_samples: usize, rng_seed: u64) -> Self {
        Self {
            kind: StimulusKind::Sine,
            amplitude,
            frequency_hz,
            phase_rad: 0.0,
            dc_offset: 0.0,
            n_samples,
            jitter_sigma: 0.0,
            rng_seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.amplitude < 0.0 {
            return Err(Error::InvalidStimulus("amplitude must be >= 0".into()));
        }
        if self.n_samples < 16 {
            return Err(Error::InvalidStimulus("n_samples must be >= 16".into()));
        }
        if self.jitter_sigma < 0.0 {
            return Err(Error::InvalidStimulus("jitter_sigma must be >= 0".into()));
        }
        Ok(())
    }
}

/// A finite stream of analog sample values with its sample rate.
#[derive(Debug, Clone)]
pub struct SampleStream {
    pub samples: Vec<f64>,
    pub sample_rate_hz: f64,
}

/// Pick the coherent-sampling bin closest to `target_freq_hz`.
///
/// The record length must be a power of two, so a bin is coprime with the
/// record exactly when it is odd. Returns the realizable frequency and its
/// bin index; the frequency is always strictly below Nyquist.
pub fn coherent_bin(
    sample_rate_hz: f64,
    target_freq_hz: f64,
    n_samples: usize,
) -> Result<(f64, usize)> {
    if !n_samples.is_power_of_two() || n_samples < 16 {
        return Err(Error::InvalidStimulus(format!(
            "n_samples {n_samples} must be a power of two >= 16"
        )));
    }
    if target_freq_hz <= 0.0 || target_freq_hz >= sample_rate_hz / 2.0 {
        return Err(Error::AboveNyquist(target_freq_hz));
    }
    let half = n_samples / 2;
    let ideal = target_freq_hz / sample_rate_hz * n_samples as f64;
    let rounded = ideal.round() as i64;
    // Nearest odd bin in [1, n/2); ties resolve upward.
    let bin = if rounded % 2 != 0 {
        rounded
    } else {
        let up = rounded + 1;
        let down = rounded - 1;
        if (up as f64 - ideal).abs() <= (ideal - down as f64).abs() && (up as usize) < half {
            up
        } else {
            down
        }
    };
    let bin = bin.clamp(1, half as i64 - 1) as usize;
    if bin % 2 == 0 {
        return Err(Error::NoCoherentBin);
    }
    Ok((bin as f64 * sample_rate_hz / n_samples as f64, bin))
}

/// Generate a sine stream, optionally with Gaussian timing jitter applied at
/// each sampling instant. Equal specs and seeds give bit-identical streams.
pub fn gen_sine(spec: &StimulusSpec, sample_rate_hz: f64) -> Result<SampleStream> {
    spec.validate()?;
    if spec.kind != StimulusKind::Sine {
        return Err(Error::InvalidStimulus("gen_sine requires kind = sine".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let w = 2.0 * std::f64::consts::PI * spec.frequency_hz;
    let ts = 1.0 / sample_rate_hz;
    let samples = (0..spec.n_samples)
        .map(|k| {
            let dt = if spec.jitter_sigma > 0.0 {
                normal.sample(&mut rng) * spec.jitter_sigma
            } else {
                0.0
            };
            spec.dc_offset + spec.amplitude * (w * (k as f64 * ts + dt) + spec.phase_rad).sin()
        })
        .collect();
    Ok(SampleStream {
        samples,
        sample_rate_hz,
    })
}

/// Generate `n_samples` uniformly spaced values from `lo` to `hi` inclusive.
pub fn gen_ramp(n_samples: usize, lo_volts: f64, hi_volts: f64) -> Result<SampleStream> {
    if lo_volts >= hi_volts {
        return Err(Error::InvalidStimulus("ramp requires lo < hi".into()));
    }
    if n_samples < 2 {
        return Err(Error::InvalidStimulus("ramp requires n_samples >= 2".into()));
    }
    let step = (hi_volts - lo_volts) / (n_samples - 1) as f64;
    let samples = (0..n_samples).map(|k| lo_volts + step * k as f64).collect();
    Ok(SampleStream {
        samples,
        sample_rate_hz: 0.0,
    })
}
