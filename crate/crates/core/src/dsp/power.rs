use super::fft::dft_in_place;
use crate::Sample;

pub fn energy(x: &[Sample]) -> f64 {
    x.iter().map(|s| s.norm_sqr()).sum()
}

pub fn mean_power(x: &[Sample]) -> f64 {
    if x.is_empty() {
        0.0
    } else {
        energy(x) / x.len() as f64
    }
}

pub fn db10(ratio: f64) -> f64 {
    10.0 * ratio.log10()
}

pub fn from_db10(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Averaged periodogram with a Hann window and 50% overlap. Returns
/// `nfft` bins ordered from `-fs/2` to `fs/2`, in linear power per bin.
/// `nfft` must be a power of two.
pub fn psd_welch(x: &[Sample], nfft: usize) -> Vec<f64> {
    let window: Vec<f64> = (0..nfft)
        .map(|n| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * n as f64 / nfft as f64).cos())
        .collect();
    let wpow: f64 = window.iter().map(|w| w * w).sum();
    let mut acc = vec![0.0; nfft];
    let mut segments = 0usize;
    let hop = nfft / 2;
    let mut start = 0;
    while start + nfft <= x.len() {
        let mut buf: Vec<Sample> = x[start..start + nfft]
            .iter()
            .zip(&window)
            .map(|(s, w)| s * *w)
            .collect();
        dft_in_place(&mut buf).expect("power-of-two PSD size");
        for (a, b) in acc.iter_mut().zip(&buf) {
            *a += b.norm_sqr() / wpow;
        }
        segments += 1;
        start += hop;
    }
    if segments > 0 {
        for a in acc.iter_mut() {
            *a /= segments as f64;
        }
    }
    acc.rotate_right(nfft / 2);
    acc
}
