//! The analog conversion chain: front-end sample-and-hold, ten non-ideal
//! 1.5-bit stages, and the terminating 2-bit flash.
//!
//! Each stage resolves its input with a three-level sub-converter (thresholds
//! at +/- vref/4), forms the residue 2v - d*vref in the multiplying DAC, and
//! hands it to the next stage. All comparators use strict greater-than at the
//! threshold, and residues clamp at the reference rails.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::bias::{stage_scales, BiasConfig};
use crate::signals::SampleStream;

/// Effective stage-1 sampling capacitance used by the front-end tracking
/// time constant, in farads.
const SAMPLING_CAP_F: f64 = 1e-12;

/// Fixed curvature profile of the complementary sampling switch, as monomial
/// coefficients of (v/vref)^1..=6 multiplying the tracked value. The NMOS and
/// PMOS channel resistances do not cancel exactly, so the profile carries
/// even-order terms alongside the dominant odd-order compression.
/// `r_on_cubic_coeff` scales the whole profile; the third harmonic it
/// produces dominates the spur budget.
const SWITCH_CURVE: [f64; 6] = [1.5, -0.8, -0.8, 24.0, 0.0, -19.2];

/// Non-idealities of one 1.5-bit stage.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StageConfig {
    /// Sampling-cap size relative to stage 1.
    pub cap_scale: f64,
    /// Bias-current size relative to stage 1.
    pub bias_scale: f64,
    /// Deviations of the lower/upper sub-converter thresholds, volts.
    pub comparator_offsets: [f64; 2],
    /// Closed-loop X2 gain deviation, unitless.
    pub gain_error: f64,
    /// Fractional residue settling error in [0, 1).
    pub settle_epsilon: f64,
    /// Input-referred sampling-noise sigma of this stage, volts RMS.
    pub ktc_sigma: f64,
}

impl StageConfig {
    pub fn ideal(cap_scale: f64) -> Self {
        Self {
            cap_scale,
            bias_scale: cap_scale,
            comparator_offsets: [0.0, 0.0],
            gain_error: 0.0,
            settle_epsilon: 0.0,
            ktc_sigma: 0.0,
        }
    }
}

/// Front-end sampling switch model.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FrontEndConfig {
    /// Nominal switch on-resistance, ohms.
    pub r_on_nominal: f64,
    /// Signal-dependent curvature of the switch transfer; sets the odd-order
    /// distortion of the sampled value.
    pub r_on_cubic_coeff: f64,
    /// Multiplier on the tracking time constant.
    pub track_time_constant_scale: f64,
    /// Stage-1 kT/C-dominated input noise, volts RMS.
    pub thermal_sigma: f64,
}

impl FrontEndConfig {
    pub fn ideal() -> Self {
        Self {
            r_on_nominal: 0.0,
            r_on_cubic_coeff: 0.0,
            track_time_constant_scale: 1.0,
            thermal_sigma: 0.0,
        }
    }
}

/// Full converter parameterization.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AdcConfig {
    /// Differential reference half-range in volts; 1.0 gives 2 V P-P full scale.
    pub vref: f64,
    pub stages: Vec<StageConfig>,
    /// Deviations of the three flash thresholds, volts.
    pub flash_offsets: [f64; 3],
    pub frontend: FrontEndConfig,
    pub bias: BiasConfig,
    /// RMS sampling-clock jitter in seconds, applied at stimulus generation.
    pub jitter_sigma: f64,
    pub rng_seed: u64,
}

impl AdcConfig {
    /// Fully ideal converter: exact 12-bit quantization apart from the
    /// boundary convention.
    pub fn ideal() -> Self {
        Self {
            vref: 1.0,
            stages: stage_scales().iter().map(|&s| StageConfig::ideal(s)).collect(),
            flash_offsets: [0.0; 3],
            frontend: FrontEndConfig::ideal(),
            bias: BiasConfig::default(),
            jitter_sigma: 0.0,
            rng_seed: 0,
        }
    }

    /// Baseline configuration with the fixed component-mismatch profile of
    /// the modeled part. Noise, jitter, and switch-distortion knobs start at
    /// zero; `harness::calibrate` fills them in from measured targets.
    pub fn silicon_default() -> Self {
        let mut cfg = Self::ideal();
        cfg.frontend.r_on_nominal = 50.0;
        // Residual capacitor-ratio mismatch of the first stages. These are
        // static, so they shape DNL/INL and the harmonic floor identically
        // at every conversion rate and input frequency.
        cfg.stages[0].gain_error = -3.2e-4;
        cfg.stages[1].gain_error = 2.05e-4;
        cfg.stages[2].gain_error = -1.3e-4;
        cfg
    }

    pub fn is_ideal(&self) -> bool {
        self.frontend.thermal_sigma == 0.0
            && self.frontend.r_on_cubic_coeff == 0.0
            && self.jitter_sigma == 0.0
            && self
                .stages
                .iter()
                .all(|s| s.gain_error == 0.0 && s.settle_epsilon == 0.0 && s.ktc_sigma == 0.0)
    }
}

/// Raw per-conversion codes before redundancy correction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawCodeFrame {
    /// Ten 1.5-bit codes, each in {0, 1, 2}.
    pub stage_codes: [u8; 10],
    /// Final flash code in {0..3}.
    pub flash_code: u8,
}

/// Three-level sub-converter decision with thresholds at +/- vref/4 shifted
/// by the comparator offsets: 2 above the upper threshold (strictly), 0 below
/// the lower one (strictly), 1 in between.
pub fn adsc_decide(v: f64, vref: f64, offsets: [f64; 2]) -> u8 {
    if v > vref / 4.0 + offsets[1] {
        2
    } else if v < -vref / 4.0 + offsets[0] {
        0
    } else {
        1
    }
}

/// Multiplying-DAC residue: 2v - (code-1)*vref with settling and gain error,
/// plus the stage noise draw, clamped at the reference rails.
pub fn mdac_residue(v: f64, code: u8, stage: &StageConfig, vref: f64, noise_draw: f64) -> f64 {
    debug_assert!(code <= 2);
    let ideal = 2.0 * v - (code as f64 - 1.0) * vref;
    let settled = ideal * (1.0 - stage.settle_epsilon) * (1.0 + stage.gain_error);
    (settled + noise_draw).clamp(-vref, vref)
}

/// 2-bit flash decision: thresholds at {-vref/2, 0, +vref/2} shifted by the
/// offsets; the code counts thresholds at or below v, so boundary ties
/// resolve to the higher code (midscale zero reads as code 2).
pub fn flash_decide(v: f64, vref: f64, flash_offsets: [f64; 3]) -> u8 {
    let thresholds = [
        -vref / 2.0 + flash_offsets[0],
        flash_offsets[1],
        vref / 2.0 + flash_offsets[2],
    ];
    thresholds.iter().filter(|&&t| v >= t).count() as u8
}

/// Front-end sample-and-hold: first-order incomplete tracking toward `v_now`
/// from the previously held value over half a clock period, followed by the
/// switch-nonlinearity transfer and the thermal noise draw.
///
/// With `r_on_nominal = 0` the switch is ideal and the output is
/// `v_now + noise_draw` exactly. The cubic coefficient bends the sampled
/// value by `-c3 * p(v/vref) * v` where `p` is the fixed switch curvature
/// profile, the error of the signal-dependent transmission-gate resistance
/// at the sampling instant.
pub fn frontend_sample(
    v_now: f64,
    v_prev: f64,
    fe: &FrontEndConfig,
    vref: f64,
    f_cr: f64,
    noise_draw: f64,
) -> f64 {
    debug_assert!(f_cr > 0.0);
    if fe.r_on_nominal <= 0.0 {
        return v_now + noise_draw;
    }
    let tau = fe.r_on_nominal * SAMPLING_CAP_F * fe.track_time_constant_scale;
    let alpha = (-1.0 / (2.0 * f_cr * tau)).exp();
    let tracked = v_now + (v_prev - v_now) * alpha;
    let x = tracked / vref;
    let curve: f64 = SWITCH_CURVE
        .iter()
        .rev()
        .fold(0.0, |acc, &c| (acc + c) * x);
    tracked - fe.r_on_cubic_coeff * curve * tracked + noise_draw
}

/// Stateful converter: owns the seeded noise generator and the held value of
/// the front-end sampler. Noise draws are consumed in a fixed order (one for
/// the front end, then one per stage), so equal seeds give identical frames.
pub struct Converter<'a> {
    cfg: &'a AdcConfig,
    f_cr: f64,
    rng: ChaCha8Rng,
    normal: Normal<f64>,
    prev_held: f64,
}

impl<'a> Converter<'a> {
    pub fn new(cfg: &'a AdcConfig, f_cr: f64) -> Self {
        Self {
            cfg,
            f_cr,
            rng: ChaCha8Rng::seed_from_u64(cfg.rng_seed),
            normal: Normal::new(0.0, 1.0).expect("unit normal"),
            prev_held: 0.0,
        }
    }

    pub fn convert_sample(&mut self, v: f64) -> RawCodeFrame {
        let cfg = self.cfg;
        let fe_noise = self.normal.sample(&mut self.rng) * cfg.frontend.thermal_sigma;
        let held = frontend_sample(v, self.prev_held, &cfg.frontend, cfg.vref, self.f_cr, fe_noise);
        self.prev_held = held;

        let mut residue = held;
        let mut stage_codes = [0u8; 10];
        for (i, stage) in cfg.stages.iter().enumerate() {
            let code = adsc_decide(residue, cfg.vref, stage.comparator_offsets);
            stage_codes[i] = code;
            let noise = self.normal.sample(&mut self.rng) * stage.ktc_sigma;
            residue = mdac_residue(residue, code, stage, cfg.vref, noise);
            debug_assert!(residue.abs() <= cfg.vref);
        }
        let flash_code = flash_decide(residue, cfg.vref, cfg.flash_offsets);
        RawCodeFrame {
            stage_codes,
            flash_code,
        }
    }
}

/// Convert a whole stream with a single seeded generator. Frames align
/// index-for-index with the input samples; pipeline latency is not modeled
/// as an output delay.
pub fn convert_stream(stream: &SampleStream, cfg: &AdcConfig, f_cr: f64) -> Vec<RawCodeFrame> {
    let mut conv = Converter::new(cfg, f_cr);
    stream.samples.iter().map(|&v| conv.convert_sample(v)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correction::{correct, correct_stream};
    use crate::signals::gen_ramp;
    use approx::assert_abs_diff_eq;

    #[test]
    fn adsc_threshold_placement() {
        assert_eq!(adsc_decide(0.0, 1.0, [0.0, 0.0]), 1);
        assert_eq!(adsc_decide(0.3, 1.0, [0.0, 0.0]), 2);
        // Lower threshold moves to -0.27, so -0.26 stays in the middle band.
        assert_eq!(adsc_decide(-0.26, 1.0, [-0.02, 0.0]), 1);
        // Boundary ties stay in the middle band.
        assert_eq!(adsc_decide(0.25, 1.0, [0.0, 0.0]), 1);
        assert_eq!(adsc_decide(-0.25, 1.0, [0.0, 0.0]), 1);
    }

    #[test]
    fn mdac_residue_law() {
        let ideal = StageConfig::ideal(1.0);
        assert_abs_diff_eq!(mdac_residue(0.0, 1, &ideal, 1.0, 0.0), 0.0);
        assert_abs_diff_eq!(mdac_residue(0.5, 2, &ideal, 1.0, 0.0), 0.0);
        assert_abs_diff_eq!(mdac_residue(0.3, 2, &ideal, 1.0, 0.0), -0.4, epsilon = 1e-15);
        let mut slow = ideal.clone();
        slow.settle_epsilon = 1e-3;
        assert_abs_diff_eq!(
            mdac_residue(0.3, 2, &slow, 1.0, 0.0),
            -0.3996,
            epsilon = 1e-12
        );
        // Clamps at the rails.
        assert_abs_diff_eq!(mdac_residue(0.9, 0, &ideal, 1.0, 0.0), 1.0);
    }

    #[test]
    fn flash_threshold_placement() {
        assert_eq!(flash_decide(-0.75, 1.0, [0.0; 3]), 0);
        assert_eq!(flash_decide(0.25, 1.0, [0.0; 3]), 2);
        // Exactly at a threshold resolves upward.
        assert_eq!(flash_decide(0.5, 1.0, [0.0; 3]), 3);
        assert_eq!(flash_decide(0.0, 1.0, [0.0; 3]), 2);
        assert_eq!(flash_decide(-0.5, 1.0, [0.0; 3]), 1);
    }

    #[test]
    fn ideal_frontend_is_identity() {
        let fe = FrontEndConfig::ideal();
        assert_eq!(frontend_sample(0.37, -0.9, &fe, 1.0, 110e6, 0.0), 0.37);
        assert_eq!(frontend_sample(0.37, -0.9, &fe, 1.0, 110e6, 1e-4), 0.37 + 1e-4);
    }

    #[test]
    fn midscale_sample_traces_to_2048() {
        let cfg = AdcConfig::ideal();
        let mut conv = Converter::new(&cfg, 110e6);
        let frame = conv.convert_sample(0.0);
        assert_eq!(frame.stage_codes, [1; 10]);
        assert_eq!(frame.flash_code, 2);
        assert_eq!(correct(&frame).value(), 2048);
    }

    #[test]
    fn full_scale_endpoints() {
        let cfg = AdcConfig::ideal();
        let mut conv = Converter::new(&cfg, 110e6);
        let top = conv.convert_sample(1.0 - f64::powi(2.0, -13));
        assert_eq!(correct(&top).value(), 4095);
        let bottom = conv.convert_sample(-1.0);
        assert_eq!(correct(&bottom).value(), 0);
    }

    #[test]
    fn stream_conversion_is_deterministic() {
        let mut cfg = AdcConfig::silicon_default();
        cfg.frontend.thermal_sigma = 3e-4;
        for s in &mut cfg.stages {
            s.ktc_sigma = 1e-4;
        }
        let ramp = gen_ramp(512, -1.0, 1.0).unwrap();
        let a = convert_stream(&ramp, &cfg, 110e6);
        let b = convert_stream(&ramp, &cfg, 110e6);
        assert_eq!(a, b);
        cfg.rng_seed = 99;
        let c = convert_stream(&ramp, &cfg, 110e6);
        assert_ne!(a, c);
    }

    #[test]
    fn empty_stream_converts_to_empty() {
        let stream = SampleStream {
            samples: vec![],
            sample_rate_hz: 110e6,
        };
        assert!(convert_stream(&stream, &AdcConfig::ideal(), 110e6).is_empty());
    }

    #[test]
    fn ideal_ramp_codes_are_monotone() {
        let cfg = AdcConfig::ideal();
        let ramp = gen_ramp(4097, -1.0, 1.0).unwrap();
        let codes = correct_stream(&convert_stream(&ramp, &cfg, 110e6));
        for w in codes.windows(2) {
            assert!(w[1] >= w[0]);
        }
    }

    #[test]
    fn residues_stay_bounded_with_quarter_ref_offsets() {
        // Worst-case tolerable comparator offsets keep every residue in range
        // without touching the rails except at the extremes.
        let mut cfg = AdcConfig::ideal();
        cfg.stages[3].comparator_offsets = [0.24, -0.24];
        let ramp = gen_ramp(2048, -0.999, 0.999).unwrap();
        // debug_assert inside convert_sample checks |residue| <= vref.
        let _ = convert_stream(&ramp, &cfg, 110e6);
    }
}
