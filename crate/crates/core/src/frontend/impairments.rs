use serde::{Deserialize, Serialize};

use crate::dsp::{mean_power, SampleStream};
use crate::{Error, Result, Sample};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PaModel {
    #[default]
    Off,
    /// Memoryless `y = a1 x + a3 x |x|^2`.
    ThirdOrder { a1: f64, a3: f64 },
}

impl PaModel {
    pub fn apply(&self, x: Sample) -> Sample {
        match *self {
            PaModel::Off => x,
            PaModel::ThirdOrder { a1, a3 } => x * a1 + x * (a3 * x.norm_sqr()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IqImbalance {
    pub gain_mismatch_db: f64,
    pub phase_mismatch_deg: f64,
}

impl IqImbalance {
    /// `y = mu x + nu conj(x)`.
    pub fn coefficients(&self) -> (Sample, Sample) {
        let g = 10f64.powf(self.gain_mismatch_db / 20.0);
        let phi = self.phase_mismatch_deg.to_radians();
        let mu = (Sample::new(1.0, 0.0) + Sample::from_polar(g, -phi)) * 0.5;
        let nu = (Sample::new(1.0, 0.0) - Sample::from_polar(g, phi)) * 0.5;
        (mu, nu)
    }
}

/// Hardware impairment settings. `None` / `Off` bypasses a stage.
/// Converter full scales are relative to the RMS of the converted signal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ImpairmentConfig {
    pub pa_model: PaModel,
    pub iq_imbalance: Option<IqImbalance>,
    /// 16 on the reference hardware.
    pub dac_bits: Option<u32>,
    pub dac_full_scale: f64,
    /// 14 on the reference hardware.
    pub adc_bits: Option<u32>,
    pub adc_full_scale: f64,
    /// `(gain_db, phase_deg)`.
    pub tx_gain_phase_offset: Option<(f64, f64)>,
    /// Integer-sample timing offset; sub-sample jitter is not modeled.
    pub timing_offset_samples: i64,
}

/// 12 dB above RMS: clips only the rare OFDM peaks.
pub const DEFAULT_FULL_SCALE: f64 = 4.0;

impl Default for ImpairmentConfig {
    fn default() -> Self {
        Self {
            pa_model: PaModel::Off,
            iq_imbalance: None,
            dac_bits: None,
            dac_full_scale: DEFAULT_FULL_SCALE,
            adc_bits: None,
            adc_full_scale: DEFAULT_FULL_SCALE,
            tx_gain_phase_offset: None,
            timing_offset_samples: 0,
        }
    }
}

impl ImpairmentConfig {
    pub fn off() -> Self {
        Self::default()
    }

    pub fn validate(&self) -> Result<()> {
        for (name, bits, fs) in [("dac", self.dac_bits, self.dac_full_scale), ("adc", self.adc_bits, self.adc_full_scale)] {
            if let Some(b) = bits {
                if !(1..=24).contains(&b) {
                    return Err(Error::Config(format!("{name}_bits {b} must lie in 1..=24")));
                }
            }
            if !(fs.is_finite() && fs > 0.0) {
                return Err(Error::Config(format!("{name}_full_scale {fs} must be positive")));
            }
        }
        Ok(())
    }
}

/// Uniform mid-rise quantizer on I and Q with saturation at `full_scale`.
pub fn quantize(x: Sample, bits: u32, full_scale: f64) -> Sample {
    let levels = (1u64 << bits) as f64;
    let step = 2.0 * full_scale / levels;
    let max_code = levels / 2.0 - 1.0;
    let q = |v: f64| {
        let code = (v / step).floor().clamp(-levels / 2.0, max_code);
        (code + 0.5) * step
    };
    Sample::new(q(x.re), q(x.im))
}

/// Depth bound (dB) for a linear canceller facing `pa`: the PA output power
/// over the power of its part uncorrelated with the input. `None` for a
/// linear PA or an empty signal.
pub fn imd_limited_depth_db(pa: &PaModel, x: &[Sample]) -> Option<f64> {
    if *pa == PaModel::Off || x.is_empty() {
        return None;
    }
    let y: Vec<Sample> = x.iter().map(|&v| pa.apply(v)).collect();
    let px: f64 = x.iter().map(|v| v.norm_sqr()).sum();
    if px == 0.0 {
        return None;
    }
    let alpha = y.iter().zip(x).map(|(a, b)| a * b.conj()).sum::<Sample>() / px;
    let distortion: f64 = y.iter().zip(x).map(|(a, b)| (a - alpha * b).norm_sqr()).sum();
    let py: f64 = y.iter().map(|v| v.norm_sqr()).sum();
    Some(if distortion == 0.0 { f64::INFINITY } else { 10.0 * (py / distortion).log10() })
}

/// Transmit chain: DAC quantization, I/Q imbalance, gain/phase offset, PA,
/// then the optional timing offset.
pub fn apply_impairments(cfg: &ImpairmentConfig, x: &SampleStream) -> SampleStream {
    let rms = mean_power(&x.samples).sqrt();
    let dac = cfg.dac_bits.filter(|_| rms > 0.0);
    let iq = cfg.iq_imbalance.map(|m| m.coefficients());
    let gp = cfg
        .tx_gain_phase_offset
        .map(|(g, p)| Sample::from_polar(10f64.powf(g / 20.0), p.to_radians()));
    let samples = x
        .samples
        .iter()
        .map(|&s| {
            let mut v = s;
            if let Some(bits) = dac {
                v = quantize(v / rms, bits, cfg.dac_full_scale) * rms;
            }
            if let Some((mu, nu)) = iq {
                v = mu * v + nu * v.conj();
            }
            if let Some(g) = gp {
                v *= g;
            }
            cfg.pa_model.apply(v)
        })
        .collect();
    SampleStream::new(x.start_index + cfg.timing_offset_samples, samples)
}

/// Receiver ADC on a signal already scaled to unit RMS.
pub fn adc_quantize(cfg: &ImpairmentConfig, x: &SampleStream) -> SampleStream {
    match cfg.adc_bits {
        None => x.clone(),
        Some(bits) => SampleStream::new(
            x.start_index,
            x.samples
                .iter()
                .map(|&s| quantize(s, bits, cfg.adc_full_scale))
                .collect(),
        ),
    }
}
