//! Dynamic and static converter metrology: coherent-FFT power spectra,
//! SNR/SNDR/SFDR/THD/ENOB extraction, sine-wave histogram DNL/INL, and the
//! area-adjusted figure of merit.

use rustfft::{num_complex::Complex, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::correction::OutputCode;
use crate::{Error, Result};

/// Number of harmonics attributed to distortion.
pub const HARMONIC_COUNT: usize = 10;

/// Spectral quality figures for one record.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectralMetrics {
    pub snr_db: f64,
    pub sndr_db: f64,
    pub sfdr_db: f64,
    pub thd_db: f64,
    pub enob_bits: f64,
    pub signal_bin: usize,
    pub signal_power_dbfs: f64,
}

/// Static linearity figures from a sine-wave histogram.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LinearityReport {
    /// One entry per interior code 1..=4094.
    pub dnl_lsb: Vec<f64>,
    /// Running sum of DNL.
    pub inl_lsb: Vec<f64>,
    pub missing_codes: Vec<u16>,
    /// Set when the record is shorter than recommended for 12-bit resolution.
    pub short_record: bool,
}

impl LinearityReport {
    pub fn dnl_max_abs(&self) -> f64 {
        self.dnl_lsb.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn inl_range(&self) -> (f64, f64) {
        self.inl_lsb
            .iter()
            .fold((0.0, 0.0), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }
}

/// Inputs to the area-adjusted figure of merit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FomInputs {
    /// Conversion rate in MS/s.
    pub f_cr: f64,
    pub enob: f64,
    /// Silicon area in mm^2.
    pub area: f64,
    /// Power in mW.
    pub power: f64,
}

/// One-sided power spectrum of a code record under coherent capture.
///
/// Codes are centered at midscale and scaled so full scale maps to +/- 1;
/// the bin powers satisfy Parseval against the time-domain mean square.
pub fn spectrum(codes: &[OutputCode]) -> Result<Vec<f64>> {
    let n = codes.len();
    if !n.is_power_of_two() || n < 16 {
        return Err(Error::NotPowerOfTwo(n));
    }
    let mut buf: Vec<Complex<f64>> = codes
        .iter()
        .map(|c| Complex::new((c.value() as f64 - 2048.0) / 2048.0, 0.0))
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let scale = 1.0 / (n as f64 * n as f64);
    let half = n / 2;
    let mut power = Vec::with_capacity(half + 1);
    power.push(buf[0].norm_sqr() * scale);
    for bin in buf.iter().take(half).skip(1) {
        power.push(2.0 * bin.norm_sqr() * scale);
    }
    power.push(buf[half].norm_sqr() * scale);
    Ok(power)
}

/// Fold harmonic index h*signal_bin into the one-sided range [0, n/2].
fn folded_harmonic(h: usize, signal_bin: usize, n: usize) -> usize {
    let idx = (h * signal_bin) % n;
    if idx > n / 2 {
        n - idx
    } else {
        idx
    }
}

fn db(ratio: f64) -> f64 {
    10.0 * ratio.log10()
}

/// Extract SNR/SNDR/SFDR/THD/ENOB from a coherent code record.
///
/// Harmonics 2..=10 of the signal bin (alias-folded) count as distortion.
/// SNR excludes DC, signal, and harmonics; SNDR excludes DC and signal only;
/// SFDR is the signal over the largest non-signal, non-DC bin.
pub fn dynamic_metrics(codes: &[OutputCode], signal_bin: usize) -> Result<SpectralMetrics> {
    let spec = spectrum(codes)?;
    let n = codes.len();
    if signal_bin == 0 || signal_bin > n / 2 {
        return Err(Error::NoSignal);
    }
    let signal_power = spec[signal_bin];
    let total_ac: f64 = spec.iter().skip(1).sum();
    let noise_and_dist = total_ac - signal_power;
    if signal_power <= 0.0 || signal_power < noise_and_dist {
        return Err(Error::NoSignal);
    }

    let mut harmonic_power = 0.0;
    let mut is_harmonic = vec![false; n / 2 + 1];
    for h in 2..=HARMONIC_COUNT {
        let idx = folded_harmonic(h, signal_bin, n);
        if idx == 0 || idx == signal_bin || is_harmonic[idx] {
            continue;
        }
        is_harmonic[idx] = true;
        harmonic_power += spec[idx];
    }
    let noise_power = noise_and_dist - harmonic_power;

    let max_spur = spec
        .iter()
        .enumerate()
        .skip(1)
        .filter(|(i, _)| *i != signal_bin)
        .map(|(_, &p)| p)
        .fold(0.0f64, f64::max);

    let sndr_db = db(signal_power / noise_and_dist);
    Ok(SpectralMetrics {
        snr_db: db(signal_power / noise_power),
        sndr_db,
        sfdr_db: db(signal_power / max_spur),
        thd_db: db(harmonic_power / signal_power),
        enob_bits: enob_from_sndr(sndr_db),
        signal_bin,
        signal_power_dbfs: db(signal_power / 0.5),
    })
}

/// Effective number of bits from SNDR: (SNDR - 1.76) / 6.02.
pub fn enob_from_sndr(sndr_db: f64) -> f64 {
    (sndr_db - 1.76) / 6.02
}

/// Sine-wave histogram linearity. The stimulus must be a sine overdriving
/// full scale slightly so the end bins saturate; transition levels are
/// recovered through the inverse-cosine of the cumulative histogram, which
/// removes the arcsine probability weighting. End codes are excluded.
pub fn histogram_linearity(codes: &[OutputCode]) -> Result<LinearityReport> {
    const CODES: usize = 4096;
    let n = codes.len();
    if n == 0 {
        return Err(Error::NoSignal);
    }
    let mut counts = [0u64; CODES];
    for c in codes {
        counts[c.value() as usize] += 1;
    }
    if counts[0] == 0 || counts[CODES - 1] == 0 {
        return Err(Error::NoSignal);
    }

    // Transition level of code k from the cumulative fraction below k.
    // v_k = -cos(pi * F_k) maps the arcsine-distributed sine back to a
    // uniform code axis (amplitude and offset drop out of the DNL ratios).
    let total = n as f64;
    let mut cumulative = 0u64;
    let mut transitions = Vec::with_capacity(CODES - 1);
    for &c in counts.iter().take(CODES - 1) {
        cumulative += c;
        transitions.push(-(std::f64::consts::PI * cumulative as f64 / total).cos());
    }

    // Interior code k in 1..=4094 has width v_{k+1} - v_k.
    let span = transitions[CODES - 2] - transitions[0];
    let avg_width = span / (CODES - 2) as f64;
    let mut dnl = Vec::with_capacity(CODES - 2);
    let mut missing = Vec::new();
    for k in 1..CODES - 1 {
        if counts[k] == 0 {
            missing.push(k as u16);
            dnl.push(-1.0);
        } else {
            dnl.push((transitions[k] - transitions[k - 1]) / avg_width - 1.0);
        }
    }
    let mut inl = Vec::with_capacity(dnl.len());
    let mut acc = 0.0;
    for &d in &dnl {
        acc += d;
        inl.push(acc);
    }
    Ok(LinearityReport {
        dnl_lsb: dnl,
        inl_lsb: inl,
        missing_codes: missing,
        short_record: n < (1 << 18),
    })
}

/// Area-adjusted figure of merit: f_cr * 2^enob / (area * power), with
/// f_cr in MS/s, area in mm^2, and power in mW.
pub fn figure_of_merit(inputs: &FomInputs) -> f64 {
    inputs.f_cr * inputs.enob.exp2() / (inputs.area * inputs.power)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn mid(v: f64) -> OutputCode {
        OutputCode(((v + 1.0) / 2.0 * 4096.0).round().clamp(0.0, 4095.0) as u16)
    }

    #[test]
    fn constant_record_has_dc_only() {
        let codes = vec![OutputCode(2048); 1024];
        let spec = spectrum(&codes).unwrap();
        for &p in spec.iter().skip(1) {
            assert!(p < 1e-25);
        }
        assert!(spectrum(&codes[..1000]).is_err());
    }

    #[test]
    fn pure_digital_sine_lands_in_its_bin() {
        let n = 1024;
        let m = 33;
        let codes: Vec<OutputCode> = (0..n)
            .map(|k| mid(0.9 * (2.0 * std::f64::consts::PI * m as f64 * k as f64 / n as f64).sin()))
            .collect();
        let spec = spectrum(&codes).unwrap();
        let sig = spec[m];
        assert!(sig > 0.3);
        let rest: f64 = spec.iter().enumerate().skip(1).filter(|(i, _)| *i != m).map(|(_, p)| p).sum();
        assert!(rest < sig * 1e-4);
    }

    #[test]
    fn parseval_on_random_codes() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let codes: Vec<OutputCode> = (0..4096).map(|_| OutputCode(rng.gen_range(0..4096))).collect();
        let spec = spectrum(&codes).unwrap();
        let freq_sum: f64 = spec.iter().sum();
        let time_ms: f64 = codes
            .iter()
            .map(|c| {
                let v = (c.value() as f64 - 2048.0) / 2048.0;
                v * v
            })
            .sum::<f64>()
            / codes.len() as f64;
        assert!((freq_sum / time_ms - 1.0).abs() < 1e-9);
    }

    #[test]
    fn ideal_quantized_sine_hits_twelve_bit_floor() {
        // Oracle: SNDR = 6.02 * 12 + 1.76 = 74.0 dB for a full-scale sine.
        let n = 8192;
        let bin = 745;
        let f = bin as f64 / n as f64;
        let codes: Vec<OutputCode> = (0..n)
            .map(|k| mid((2.0 * std::f64::consts::PI * f * k as f64).sin() * 0.99999))
            .collect();
        let m = dynamic_metrics(&codes, bin).unwrap();
        assert!((m.sndr_db - 74.0).abs() < 0.3, "sndr {}", m.sndr_db);
        assert!((m.enob_bits - 12.0).abs() < 0.05);
        assert!(m.snr_db >= m.sndr_db);
    }

    #[test]
    fn enob_of_reported_sndr() {
        assert_abs_diff_eq!(enob_from_sndr(64.2), 10.37, epsilon = 0.005);
    }

    #[test]
    fn white_noise_snr_matches_closed_form() {
        // Closed-form oracle: SNR = 20 log10(A_rms / sigma_total) with the
        // quantization noise folded into sigma_total.
        let n = 8192;
        let bin = 745;
        let f = bin as f64 / n as f64;
        let sigma = 1e-3;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let normal = rand_distr::Normal::new(0.0, sigma).unwrap();
        let codes: Vec<OutputCode> = (0..n)
            .map(|k| {
                let v = 0.995 * (2.0 * std::f64::consts::PI * f * k as f64).sin()
                    + rand_distr::Distribution::sample(&normal, &mut rng);
                mid(v)
            })
            .collect();
        let m = dynamic_metrics(&codes, bin).unwrap();
        let q = (2.0 / 4096.0) / 12f64.sqrt();
        let sigma_total = (sigma * sigma + q * q).sqrt();
        let expect = 20.0 * ((0.995 / 2f64.sqrt()) / sigma_total).log10();
        assert!((m.snr_db - expect).abs() < 0.3, "snr {} vs {}", m.snr_db, expect);
    }

    #[test]
    fn degenerate_records_error() {
        let codes = vec![OutputCode(2048); 1024];
        assert!(matches!(dynamic_metrics(&codes, 0), Err(Error::NoSignal)));
        assert!(matches!(dynamic_metrics(&codes, 33), Err(Error::NoSignal)));
    }

    #[test]
    fn histogram_of_ideal_codes_is_flat() {
        // Coherent capture makes the sine phases equidistribute exactly, so
        // the residual DNL is pure histogram discretization error.
        let n = 1 << 20;
        let bin = 363101; // odd, coprime with 2^20
        let f = bin as f64 / n as f64;
        let codes: Vec<OutputCode> = (0..n)
            .map(|k| mid(1.012 * (2.0 * std::f64::consts::PI * f * k as f64).sin()))
            .collect();
        let rep = histogram_linearity(&codes).unwrap();
        assert!(rep.missing_codes.is_empty());
        assert!(!rep.short_record);
        assert!(rep.dnl_max_abs() < 0.05, "dnl {}", rep.dnl_max_abs());
        let (lo, hi) = rep.inl_range();
        assert!(lo > -0.05 && hi < 0.05, "inl [{lo}, {hi}]");
    }

    #[test]
    fn histogram_requires_overdrive() {
        let n = 1 << 16;
        let codes: Vec<OutputCode> = (0..n)
            .map(|k| mid(0.5 * (2.0 * std::f64::consts::PI * 101.0 * k as f64 / n as f64).sin()))
            .collect();
        assert!(histogram_linearity(&codes).is_err());
    }

    #[test]
    fn fom_of_reported_operating_point() {
        let fm = figure_of_merit(&FomInputs {
            f_cr: 110.0,
            enob: 10.4,
            area: 0.86,
            power: 97.0,
        });
        assert!((fm - 1782.0).abs() < 1.0, "fm {fm}");
        let fm12 = figure_of_merit(&FomInputs {
            f_cr: 110.0,
            enob: 12.0,
            area: 0.86,
            power: 97.0,
        });
        assert_abs_diff_eq!(fm12 / fm, 2f64.powf(1.6), epsilon = 1e-9);
        let half = figure_of_merit(&FomInputs {
            f_cr: 110.0,
            enob: 10.4,
            area: 1.72,
            power: 97.0,
        });
        assert_abs_diff_eq!(half, fm / 2.0, epsilon = 1e-9);
    }

    proptest! {
        #[test]
        fn enob_sndr_round_trip(b in 1.0..16.0f64) {
            let sndr = 6.02 * b + 1.76;
            prop_assert!((enob_from_sndr(sndr) - b).abs() < 1e-12);
        }

        #[test]
        fn dnl_sums_to_zero(seed in 0u64..50) {
            // The cumulative construction pins the DNL sum to zero by design;
            // check it numerically on noisy sine records.
            let n = 1 << 16;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let normal = rand_distr::Normal::new(0.0, 2e-3).unwrap();
            let codes: Vec<OutputCode> = (0..n)
                .map(|k| {
                    let v = 1.02 * (2.0 * std::f64::consts::PI * 4001.0 * k as f64 / n as f64).sin()
                        + rand_distr::Distribution::sample(&normal, &mut rng);
                    mid(v)
                })
                .collect();
            let rep = histogram_linearity(&codes).unwrap();
            if rep.missing_codes.is_empty() {
                let sum: f64 = rep.dnl_lsb.iter().sum();
                prop_assert!(sum.abs() < 1e-6 * 4094.0);
            }
        }
    }
}
