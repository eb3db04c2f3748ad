use std::f64::consts::PI;

use super::SampleStream;
use crate::{Error, Result, Sample};

/// Low-pass response requirements.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FirSpec {
    /// -6 dB point of the windowed-sinc prototype.
    pub cutoff_hz: f64,
    pub stopband_atten_db: f64,
    /// Peak-to-peak passband ripple.
    pub passband_ripple_db: f64,
    pub sample_rate_hz: f64,
    pub num_taps: usize,
}

impl FirSpec {
    /// PSS extraction filter: 1.4 MHz cutoff, 50 dB stopband, 0.1 dB ripple.
    /// 255 taps gives a ~0.35 MHz transition band at 30.72 MS/s.
    pub fn pss_lowpass(sample_rate_hz: f64) -> Self {
        Self {
            cutoff_hz: 1.4e6,
            stopband_atten_db: 50.0,
            passband_ripple_db: 0.1,
            sample_rate_hz,
            num_taps: 255,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.sample_rate_hz > 0.0) {
            return Err(Error::Config("sample rate must be positive".into()));
        }
        if !(self.cutoff_hz > 0.0 && self.cutoff_hz < self.sample_rate_hz / 2.0) {
            return Err(Error::Config(format!(
                "cutoff {} Hz must lie in (0, {}) Hz",
                self.cutoff_hz,
                self.sample_rate_hz / 2.0
            )));
        }
        if self.num_taps < 3 || self.num_taps.is_multiple_of(2) {
            return Err(Error::Config(format!(
                "num_taps must be odd and >= 3, got {}",
                self.num_taps
            )));
        }
        if !(self.stopband_atten_db > 0.0 && self.passband_ripple_db > 0.0) {
            return Err(Error::Config(
                "stopband attenuation and passband ripple must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Linear-phase real FIR.
#[derive(Debug, Clone, PartialEq)]
pub struct FirFilter {
    pub taps: Vec<f64>,
    pub group_delay_samples: usize,
    pub passband_edge_hz: f64,
    pub stopband_edge_hz: f64,
}

impl FirFilter {
    pub fn from_taps(taps: Vec<f64>) -> Self {
        let group_delay_samples = taps.len().saturating_sub(1) / 2;
        Self {
            taps,
            group_delay_samples,
            passband_edge_hz: f64::NAN,
            stopband_edge_hz: f64::NAN,
        }
    }

    /// Magnitude response in dB at `freq_hz`, from the tap DTFT.
    pub fn response_db(&self, freq_hz: f64, sample_rate_hz: f64) -> f64 {
        let w = 2.0 * PI * freq_hz / sample_rate_hz;
        let h: Sample = self
            .taps
            .iter()
            .enumerate()
            .map(|(n, &t)| Sample::from_polar(t, -w * n as f64))
            .sum();
        20.0 * h.norm().log10()
    }

    /// Worst passband ripple (peak-to-peak) and worst stopband level over a
    /// `points`-point grid on `[0, fs/2]` plus both band edges.
    pub fn measure(&self, sample_rate_hz: f64, points: usize) -> (f64, f64) {
        let mut pass_min = f64::INFINITY;
        let mut pass_max = f64::NEG_INFINITY;
        let mut stop_max = f64::NEG_INFINITY;
        let grid = (0..points).map(|i| sample_rate_hz / 2.0 * i as f64 / (points - 1) as f64);
        let edges = [self.passband_edge_hz, self.stopband_edge_hz];
        for f in grid.chain(edges.into_iter().filter(|e| e.is_finite())) {
            let db = self.response_db(f, sample_rate_hz);
            if f <= self.passband_edge_hz {
                pass_min = pass_min.min(db);
                pass_max = pass_max.max(db);
            } else if f >= self.stopband_edge_hz {
                stop_max = stop_max.max(db);
            }
        }
        (pass_max - pass_min, stop_max)
    }
}

fn bessel_i0(x: f64) -> f64 {
    let mut sum = 1.0;
    let mut term = 1.0;
    let half = x / 2.0;
    for k in 1..200 {
        term *= (half / k as f64) * (half / k as f64);
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    sum
}

fn kaiser_beta(atten_db: f64) -> f64 {
    if atten_db > 50.0 {
        0.1102 * (atten_db - 8.7)
    } else if atten_db >= 21.0 {
        0.5842 * (atten_db - 21.0).powf(0.4) + 0.07886 * (atten_db - 21.0)
    } else {
        0.0
    }
}

/// Kaiser-window low-pass design. The tap count comes from `FirSpec`; the
/// transition width follows from it, and the result is checked on a dense
/// grid before being returned.
pub fn design_lowpass(spec: &FirSpec) -> Result<FirFilter> {
    spec.validate()?;
    let fs = spec.sample_rate_hz;
    let n = spec.num_taps;
    let ripple_lin = 10f64.powf(spec.passband_ripple_db / 20.0);
    let delta_pass = (ripple_lin - 1.0) / (ripple_lin + 1.0);
    let delta_stop = 10f64.powf(-spec.stopband_atten_db / 20.0);
    let base_atten = -20.0 * delta_pass.min(delta_stop).log10();

    let mut last_err = String::new();
    // The Kaiser formulas are approximate; tighten the design target in
    // small steps until the measured response meets the spec.
    for step in 0..12 {
        let atten = base_atten + 0.5 * step as f64;
        let beta = kaiser_beta(atten);
        let transition_hz = (atten - 7.95) / (2.285 * (n - 1) as f64) / (2.0 * PI) * fs;
        let passband_edge_hz = spec.cutoff_hz - transition_hz / 2.0;
        let stopband_edge_hz = spec.cutoff_hz + transition_hz / 2.0;
        if passband_edge_hz <= 0.0 {
            return Err(Error::Design(format!(
                "{n} taps give a {transition_hz:.0} Hz transition band, too wide for a \
                 {:.0} Hz cutoff at {:.1} dB stopband attenuation",
                spec.cutoff_hz, spec.stopband_atten_db
            )));
        }
        if stopband_edge_hz >= fs / 2.0 {
            return Err(Error::Design(format!(
                "stopband edge {stopband_edge_hz:.0} Hz reaches Nyquist with {n} taps"
            )));
        }

        let mid = (n - 1) as f64 / 2.0;
        let fc = spec.cutoff_hz / fs;
        let i0_beta = bessel_i0(beta);
        let mut taps: Vec<f64> = (0..n)
            .map(|i| {
                let t = i as f64 - mid;
                let sinc = if t == 0.0 {
                    2.0 * fc
                } else {
                    (2.0 * PI * fc * t).sin() / (PI * t)
                };
                let r = t / mid;
                let w = bessel_i0(beta * (1.0 - r * r).max(0.0).sqrt()) / i0_beta;
                sinc * w
            })
            .collect();
        let dc: f64 = taps.iter().sum();
        for t in taps.iter_mut() {
            *t /= dc;
        }
        // exact symmetry
        for i in 0..n / 2 {
            let avg = 0.5 * (taps[i] + taps[n - 1 - i]);
            taps[i] = avg;
            taps[n - 1 - i] = avg;
        }

        let filter = FirFilter {
            taps,
            group_delay_samples: (n - 1) / 2,
            passband_edge_hz,
            stopband_edge_hz,
        };
        let (ripple, stop) = filter.measure(fs, 4096);
        let ripple_ok = ripple <= spec.passband_ripple_db;
        let stop_ok = stop <= -spec.stopband_atten_db;
        if ripple_ok && stop_ok {
            return Ok(filter);
        }
        last_err = if !stop_ok {
            format!(
                "stopband attenuation {:.2} dB short of {:.2} dB",
                -stop, spec.stopband_atten_db
            )
        } else {
            format!(
                "passband ripple {ripple:.4} dB exceeds {:.4} dB",
                spec.passband_ripple_db
            )
        };
    }
    Err(Error::Design(last_err))
}

/// Streaming FIR stage: keeps its own delay line between calls.
#[derive(Debug, Clone)]
pub struct FirStage {
    taps: Vec<f64>,
    history: Vec<Sample>,
}

impl FirStage {
    pub fn new(filter: &FirFilter) -> Self {
        Self {
            taps: filter.taps.clone(),
            history: vec![Sample::new(0.0, 0.0); filter.taps.len().saturating_sub(1)],
        }
    }

    pub fn process(&mut self, input: &[Sample]) -> Vec<Sample> {
        let hist = self.history.len();
        let mut buf = Vec::with_capacity(hist + input.len());
        buf.extend_from_slice(&self.history);
        buf.extend_from_slice(input);
        let out = (0..input.len())
            .map(|n| {
                let newest = n + hist;
                self.taps
                    .iter()
                    .enumerate()
                    .map(|(i, &t)| buf[newest - i] * t)
                    .sum()
            })
            .collect();
        let keep = buf.len() - hist;
        self.history.copy_from_slice(&buf[keep..]);
        out
    }
}

/// Filter a stream. The output is re-indexed by the group delay so that an
/// event at global index `i` in the input appears at index `i` in the output.
pub fn fir_apply(filter: &FirFilter, x: &SampleStream) -> SampleStream {
    let mut stage = FirStage::new(filter);
    SampleStream::new(
        x.start_index - filter.group_delay_samples as i64,
        stage.process(&x.samples),
    )
}
