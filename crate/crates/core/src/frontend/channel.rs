use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::dsp::SampleStream;
use crate::{Error, Result, Sample};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelTap {
    pub delay: usize,
    pub gain: Sample,
}

/// Tapped-delay-line channel plus AWGN of `noise_power` per complex sample.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub taps: Vec<ChannelTap>,
    pub noise_power: f64,
}

impl ChannelRealization {
    pub fn identity() -> Self {
        Self {
            taps: vec![ChannelTap {
                delay: 0,
                gain: Sample::new(1.0, 0.0),
            }],
            noise_power: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.taps.is_empty() {
            return Err(Error::Config("channel has no taps".into()));
        }
        if self.taps.windows(2).any(|w| w[1].delay <= w[0].delay) {
            return Err(Error::Config("channel tap delays must be strictly increasing".into()));
        }
        if !(self.noise_power >= 0.0) {
            return Err(Error::Config(format!("noise_power {} is negative", self.noise_power)));
        }
        Ok(())
    }

    /// SI paths must stay inside the cyclic prefix.
    pub fn validate_si(&self, cp_len: usize) -> Result<()> {
        self.validate()?;
        if self.max_delay() >= cp_len {
            return Err(Error::Config(format!(
                "SI channel delay {} is not below the CP length {cp_len}",
                self.max_delay()
            )));
        }
        Ok(())
    }

    pub fn max_delay(&self) -> usize {
        self.taps.iter().map(|t| t.delay).max().unwrap_or(0)
    }

    pub fn power_gain(&self) -> f64 {
        self.taps.iter().map(|t| t.gain.norm_sqr()).sum()
    }

    /// `H[k] = sum g e^{-j 2 pi k d / N}` for signed subcarrier `k`.
    pub fn frequency_response(&self, fft_size: usize, k: i32) -> Sample {
        self.taps
            .iter()
            .map(|t| {
                let r = (k as i64 * t.delay as i64).rem_euclid(fft_size as i64) as f64;
                t.gain * Sample::from_polar(1.0, -2.0 * PI * r / fft_size as f64)
            })
            .sum()
    }

    /// Noise-free convolution; output keeps `x.start_index` and grows by the
    /// largest delay.
    pub fn convolve(&self, x: &SampleStream) -> SampleStream {
        let mut out = vec![Sample::new(0.0, 0.0); x.len() + self.max_delay()];
        for t in &self.taps {
            for (i, s) in x.samples.iter().enumerate() {
                out[i + t.delay] += t.gain * s;
            }
        }
        SampleStream::new(x.start_index, out)
    }
}

/// Multipath plus AWGN drawn from a generator seeded with `seed`.
pub fn apply_channel(ch: &ChannelRealization, x: &SampleStream, seed: u64) -> SampleStream {
    let y = ch.convolve(x);
    add_noise(&y, ch.noise_power, seed)
}

/// Circular complex Gaussian noise, `noise_power` per complex sample.
pub fn add_noise(x: &SampleStream, noise_power: f64, seed: u64) -> SampleStream {
    if noise_power <= 0.0 {
        return x.clone();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, (noise_power / 2.0).sqrt()).expect("finite sigma");
    SampleStream::new(
        x.start_index,
        x.samples
            .iter()
            .map(|s| s + Sample::new(normal.sample(&mut rng), normal.sample(&mut rng)))
            .collect(),
    )
}
