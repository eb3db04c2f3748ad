use nalgebra::{DMatrix, DVector};

use crate::dsp::SampleStream;
use crate::{Error, Result, Sample};

/// Tap support of the time-domain SI fit, relative to the PSS-derived shift.
pub const SI_FIT_FIRST_TAP: i64 = -16;
pub const SI_FIT_TAPS: usize = 80;
/// Samples used by the fit.
pub const SI_FIT_LEN: usize = 16_384;

/// Time-domain estimate of the SI path: `rx[n] ~ sum_d taps[d] tx[n - shift - d]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SiFit {
    pub shift: i64,
    pub taps: Vec<Sample>,
    /// Residual-to-received power ratio over the fit window.
    pub residual_ratio: f64,
}

impl SiFit {
    /// Delay (relative to `tx`) of the strongest fitted tap.
    pub fn strongest_delay(&self) -> i64 {
        let (d, _) = self
            .taps
            .iter()
            .enumerate()
            .fold((0, -1.0), |acc, (d, t)| if t.norm_sqr() > acc.1 { (d, t.norm_sqr()) } else { acc });
        self.shift + d as i64
    }

    /// SI as predicted over the index range of `rx`.
    pub fn rebuild(&self, tx: &SampleStream, start: i64, len: usize) -> SampleStream {
        let samples = (0..len as i64)
            .map(|i| {
                self.taps
                    .iter()
                    .enumerate()
                    .map(|(d, t)| t * tx.at(start + i - self.shift - d as i64))
                    .sum()
            })
            .collect();
        SampleStream::new(start, samples)
    }
}

/// Least-squares fit of [`SI_FIT_TAPS`] taps starting at `shift`.
///
/// The normal matrix is Hermitian Toeplitz up to window-edge terms; the
/// first row is summed directly and the rest is filled by sliding the
/// window one sample at a time, so the matrix stays exact.
pub fn fit_si(rx: &SampleStream, tx: &SampleStream, base_shift: i64) -> Result<SiFit> {
    let p = SI_FIT_TAPS;
    let shift = base_shift + SI_FIT_FIRST_TAP;
    // window of rx indices n where x[n - shift - d] is defined for every d
    let lo = rx.start_index.max(tx.start_index + shift + p as i64);
    let hi = rx.end_index().min(tx.end_index() + shift);
    if hi - lo < 4 * p as i64 {
        return Err(Error::Estimation(format!(
            "SI fit needs {} overlapping samples, have {}",
            4 * p,
            (hi - lo).max(0)
        )));
    }
    let len = ((hi - lo) as usize).min(SI_FIT_LEN);
    let lo = lo + ((hi - lo) as usize - len) as i64 / 2;
    let x = |n: i64, d: usize| tx.at(n - shift - d as i64);

    // a[i][d] = sum_n x[n-d] conj(x[n-i]); b[i] = sum_n y[n] conj(x[n-i])
    let mut a = DMatrix::<Sample>::zeros(p, p);
    let mut b = DVector::<Sample>::zeros(p);
    let mut ey = 0.0;
    for n in lo..lo + len as i64 {
        let y = rx.at(n);
        ey += y.norm_sqr();
        let x0c = x(n, 0).conj();
        for d in 0..p {
            a[(0, d)] += x(n, d) * x0c;
            b[d] += y * x(n, d).conj();
        }
    }
    for i in 1..p {
        for d in i..p {
            // x(n, d) = x(n - 1, d - 1): slide the window back one sample
            let first = lo - 1;
            let last = lo + len as i64 - 1;
            a[(i, d)] = a[(i - 1, d - 1)] + x(first, d - 1) * x(first, i - 1).conj()
                - x(last, d - 1) * x(last, i - 1).conj();
        }
    }
    for i in 0..p {
        for d in 0..i {
            a[(i, d)] = a[(d, i)].conj();
        }
    }
    let load = (0..p).map(|i| a[(i, i)].re).sum::<f64>() / p as f64 * 1e-10;
    for i in 0..p {
        a[(i, i)] += Sample::new(load, 0.0);
    }
    let chol = a
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Estimation("SI normal matrix is not positive definite".into()))?;
    let h = chol.solve(&b);
    let explained: f64 = h.iter().zip(b.iter()).map(|(h, b)| (h.conj() * b).re).sum();
    Ok(SiFit {
        shift,
        taps: h.iter().copied().collect(),
        residual_ratio: ((ey - explained) / ey.max(f64::MIN_POSITIVE)).max(0.0),
    })
}

/// Try each candidate shift and keep the best-fitting one.
pub fn fit_si_best(rx: &SampleStream, tx: &SampleStream, candidates: &[i64]) -> Result<SiFit> {
    let mut best: Option<SiFit> = None;
    let mut last_err = None;
    for &c in candidates {
        match fit_si(rx, tx, c) {
            Ok(f) => {
                if best.as_ref().is_none_or(|b| f.residual_ratio < b.residual_ratio) {
                    best = Some(f);
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    best.ok_or_else(|| last_err.unwrap_or_else(|| Error::Estimation("no SI shift candidates".into())))
}

/// `rx` with the fitted SI removed.
pub fn subtract_si(rx: &SampleStream, tx: &SampleStream, fit: &SiFit) -> SampleStream {
    let si = fit.rebuild(tx, rx.start_index, rx.len());
    SampleStream::new(
        rx.start_index,
        rx.samples.iter().zip(&si.samples).map(|(r, s)| r - s).collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::mean_power;
    use crate::frontend::{add_noise, ChannelRealization, ChannelTap};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn noise_like(n: usize, seed: u64) -> SampleStream {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        SampleStream::new(
            0,
            (0..n)
                .map(|_| Sample::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect(),
        )
    }

    fn si_channel() -> ChannelRealization {
        ChannelRealization {
            taps: vec![
                ChannelTap { delay: 2, gain: Sample::from_polar(1.0, 0.3) },
                ChannelTap { delay: 9, gain: Sample::from_polar(0.2, -1.0) },
                ChannelTap { delay: 30, gain: Sample::from_polar(0.05, 2.0) },
            ],
            noise_power: 0.0,
        }
    }

    #[test]
    fn exact_fit_recovers_taps() {
        let tx = noise_like(40_000, 1);
        let ch = si_channel();
        let rx = SampleStream::new(100, ch.convolve(&tx).samples);
        let fit = fit_si(&rx, &tx, 100).unwrap();
        for t in &ch.taps {
            let idx = (t.delay as i64 - SI_FIT_FIRST_TAP) as usize;
            assert!((fit.taps[idx] - t.gain).norm() < 1e-8, "tap {}", t.delay);
        }
        assert_eq!(fit.strongest_delay(), 102);
        let clean = subtract_si(&rx, &tx, &fit);
        assert!(mean_power(&clean.samples) < 1e-16 * mean_power(&rx.samples));
    }

    #[test]
    fn normal_matrix_matches_direct_sum() {
        // oracle: solve the same LS by forming the matrix by brute force
        let tx = noise_like(3000, 2);
        let rx = add_noise(&si_channel().convolve(&tx), 0.01, 3);
        let fit = fit_si(&rx, &tx, 0).unwrap();
        let shift = SI_FIT_FIRST_TAP;
        let p = SI_FIT_TAPS;
        let lo = (shift + p as i64).max(0);
        let hi = rx.end_index().min(tx.end_index() + shift);
        let mut a = DMatrix::<Sample>::zeros(hi as usize - lo as usize, p);
        let mut y = DVector::<Sample>::zeros(hi as usize - lo as usize);
        for (r, n) in (lo..hi).enumerate() {
            y[r] = rx.at(n);
            for d in 0..p {
                a[(r, d)] = tx.at(n - shift - d as i64);
            }
        }
        let ah = a.adjoint();
        let h = (&ah * &a).cholesky().unwrap().solve(&(&ah * &y));
        for d in 0..p {
            assert!((h[d] - fit.taps[d]).norm() < 1e-6, "tap {d}");
        }
    }

    #[test]
    fn best_candidate_wins() {
        let tx = noise_like(60_000, 4);
        let rx = SampleStream::new(5000, si_channel().convolve(&tx).samples);
        let fit = fit_si_best(&rx, &tx, &[5000 - 20_000, 5000, 25_000]).unwrap();
        assert_eq!(fit.shift, 5000 + SI_FIT_FIRST_TAP);
        assert!(fit.residual_ratio < 1e-8);
    }

    #[test]
    fn no_overlap_is_an_error() {
        let tx = noise_like(100, 5);
        let rx = SampleStream::new(10_000, noise_like(100, 6).samples);
        assert!(matches!(fit_si(&rx, &tx, 0), Err(Error::Estimation(_))));
    }
}
