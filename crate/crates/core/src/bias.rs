//! Switched-capacitor bias generator model: bias current law, stage scaling,
//! the settling-error link between bias and conversion rate, and the linear
//! power macro-model.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Transconductance-vs-current model for the residue amplifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GmModel {
    /// gm proportional to bias current: settling error independent of rate.
    LinearInCurrent,
    /// gm proportional to sqrt(bias current): settling error grows with rate.
    SqrtInCurrent,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BiasConfig {
    /// SC bias capacitor in farads.
    pub c_b: f64,
    /// Bias reference voltage in volts.
    pub v_bias: f64,
    pub gm_model: GmModel,
    /// Number of settling time constants in the half-period at stage 1 and
    /// the nominal conversion rate.
    pub gbw_calibration: f64,
    /// Nominal conversion rate in Hz.
    pub nominal_f_cr: f64,
    /// Power model slope in mW per MS/s.
    pub power_slope: f64,
    /// Power model intercept in mW.
    pub power_intercept: f64,
}

impl Default for BiasConfig {
    fn default() -> Self {
        Self {
            c_b: 1e-12,
            v_bias: 0.9,
            gm_model: GmModel::SqrtInCurrent,
            gbw_calibration: 13.0,
            nominal_f_cr: 110e6,
            // Two-point fit of the measured 97 mW @ 110 MS/s, 110 mW @ 130 MS/s.
            power_slope: 0.65,
            power_intercept: 25.5,
        }
    }
}

/// Bias current of the SC generator: I = C_B * f_CR * V_BIAS.
pub fn bias_current(c_b: f64, f_cr: f64, v_bias: f64) -> Result<f64> {
    if c_b <= 0.0 || f_cr <= 0.0 || v_bias <= 0.0 {
        return Err(Error::InvalidBias(
            "bias_current requires positive c_b, f_cr, v_bias".into(),
        ));
    }
    Ok(c_b * f_cr * v_bias)
}

/// Per-stage scaling of sampling capacitance and bias current: stage 1 at
/// full size, stage 2 at 2/3, stages 3..10 at 1/3. Applied identically to
/// C_H and I_BIAS so settling-time-constant ratios are preserved.
pub fn stage_scales() -> [f64; 10] {
    let mut s = [1.0 / 3.0; 10];
    s[0] = 1.0;
    s[1] = 2.0 / 3.0;
    s
}

/// Fractional residue settling error epsilon = exp(-t_s / tau) with
/// t_s = 1/(2 f_cr), the full half-period (no non-overlap deduction).
///
/// Bias current follows the SC generator, so under the linear gm model
/// t_s/tau is rate-independent; under the sqrt model t_s/tau scales as
/// sqrt(nominal_f_cr / f_cr). Cap and bias scale together per stage, so
/// all stages share the same epsilon.
pub fn settle_epsilon(_stage_index: usize, f_cr: f64, cfg: &BiasConfig) -> f64 {
    let n0 = cfg.gbw_calibration;
    let m = match cfg.gm_model {
        GmModel::LinearInCurrent => n0,
        GmModel::SqrtInCurrent => n0 * (cfg.nominal_f_cr / f_cr).sqrt(),
    };
    (-m).exp()
}

/// Total analog power in mW at a conversion rate given in Hz.
pub fn power_mw(f_cr: f64, cfg: &BiasConfig) -> f64 {
    cfg.power_intercept + cfg.power_slope * (f_cr / 1e6)
}
