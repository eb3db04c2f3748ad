use super::fft::{dft_in_place, idft_in_place};
use crate::{Error, Result, Sample};

/// Normalized sliding correlation of `x` against `reference`:
///
/// `out[n] = |sum_k x[n+k] conj(r[k])|^2 / (sum |r|^2 * sum_k |x[n+k]|^2)`
///
/// for every lag where the reference fits entirely inside `x`. Values lie in
/// `[0, 1]`; lags whose window carries no energy report 0.
///
/// Computed with overlap-save blocks so rounding error stays relative to the
/// local signal level rather than the whole stream.
pub fn sliding_xcorr(x: &[Sample], reference: &[Sample]) -> Result<Vec<f64>> {
    let m = reference.len();
    if m == 0 {
        return Err(Error::Config("correlation reference is empty".into()));
    }
    if x.len() < m {
        return Ok(Vec::new());
    }
    let ref_energy: f64 = reference.iter().map(|s| s.norm_sqr()).sum();
    let lags = x.len() - m + 1;
    if ref_energy == 0.0 {
        return Ok(vec![0.0; lags]);
    }

    let fft_len = (4 * m).next_power_of_two().max(64);
    let hop = fft_len - m + 1;
    let mut ref_spec = vec![Sample::new(0.0, 0.0); fft_len];
    ref_spec[..m].copy_from_slice(reference);
    dft_in_place(&mut ref_spec)?;
    for v in ref_spec.iter_mut() {
        *v = v.conj();
    }

    let mut out = Vec::with_capacity(lags);
    let mut block = vec![Sample::new(0.0, 0.0); fft_len];
    let mut prefix = vec![0.0f64; fft_len + 1];
    let mut base = 0;
    while base < lags {
        let count = hop.min(lags - base);
        let seg_len = (count + m - 1).min(x.len() - base);
        block.fill(Sample::new(0.0, 0.0));
        block[..seg_len].copy_from_slice(&x[base..base + seg_len]);

        prefix[0] = 0.0;
        for i in 0..seg_len {
            prefix[i + 1] = prefix[i] + block[i].norm_sqr();
        }
        let seg_energy = prefix[seg_len];
        let floor = seg_energy * 1e-12;

        dft_in_place(&mut block)?;
        for (b, r) in block.iter_mut().zip(&ref_spec) {
            *b *= r;
        }
        idft_in_place(&mut block)?;

        for n in 0..count {
            let win = prefix[n + m] - prefix[n];
            let value = if win <= floor || win <= 0.0 {
                0.0
            } else {
                (block[n].norm_sqr() / (ref_energy * win)).clamp(0.0, 1.0)
            };
            out.push(value);
        }
        base += count;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::waveform::generate_pss;
    use proptest::prelude::*;

    fn direct(x: &[Sample], r: &[Sample]) -> Vec<f64> {
        let er: f64 = r.iter().map(|s| s.norm_sqr()).sum();
        (0..=x.len() - r.len())
            .map(|n| {
                let c: Sample = (0..r.len()).map(|k| x[n + k] * r[k].conj()).sum();
                let ex: f64 = (0..r.len()).map(|k| x[n + k].norm_sqr()).sum();
                if ex == 0.0 {
                    0.0
                } else {
                    c.norm_sqr() / (er * ex)
                }
            })
            .collect()
    }

    fn chirp(len: usize) -> Vec<Sample> {
        (0..len)
            .map(|i| Sample::from_polar(1.0, 0.01 * (i * i) as f64))
            .collect()
    }

    #[test]
    fn embedded_reference_peaks_at_one() {
        let r = chirp(100);
        let d = 777;
        let mut x = vec![Sample::new(0.0, 0.0); 3000];
        x[d..d + 100].copy_from_slice(&r);
        let out = sliding_xcorr(&x, &r).unwrap();
        assert!((out[d] - 1.0).abs() < 1e-9);
        for (i, v) in out.iter().enumerate() {
            if i != d {
                assert!(*v < 1.0 - 1e-6, "lag {i} value {v}");
            }
        }
    }

    #[test]
    fn orthogonal_input_gives_zero() {
        // alternating-sign reference against a constant input
        let r: Vec<Sample> = (0..64)
            .map(|i| Sample::new(if i % 2 == 0 { 1.0 } else { -1.0 }, 0.0))
            .collect();
        let x = vec![Sample::new(1.0, 0.5); 500];
        let out = sliding_xcorr(&x, &r).unwrap();
        assert!(out.iter().all(|v| *v < 1e-20));
    }

    #[test]
    fn empty_reference_rejected() {
        assert!(sliding_xcorr(&[Sample::new(1.0, 0.0)], &[]).is_err());
    }

    #[test]
    fn zc_roots_25_and_29_have_low_cross_correlation() {
        // 63-long sequences with DC zero, all cyclic lags
        let seq = |u| {
            let p = generate_pss(u).unwrap();
            let mut v = vec![Sample::new(0.0, 0.0); 63];
            for (k, val) in p.iter() {
                v[(k + 31) as usize] = val;
            }
            v
        };
        let a = seq(25);
        let b = seq(29);
        let doubled: Vec<Sample> = b.iter().chain(b.iter()).cloned().collect();
        let out = sliding_xcorr(&doubled[..125], &a).unwrap();
        assert_eq!(out.len(), 63);
        let peak = out.iter().cloned().fold(0.0, f64::max);
        assert!(peak < 0.1, "peak {peak}");
        let brute = direct(&doubled[..125], &a);
        for (f, s) in out.iter().zip(&brute) {
            assert!((f - s).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn matches_direct_and_stays_in_unit_interval(
            x in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 40..600),
            r in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..40),
        ) {
            let xs: Vec<Sample> = x.iter().map(|&(a, b)| Sample::new(a, b)).collect();
            let rs: Vec<Sample> = r.iter().map(|&(a, b)| Sample::new(a, b)).collect();
            let fast = sliding_xcorr(&xs, &rs).unwrap();
            let slow = direct(&xs, &rs);
            prop_assert_eq!(fast.len(), slow.len());
            for (f, s) in fast.iter().zip(&slow) {
                prop_assert!((0.0..=1.0).contains(f));
                prop_assert!((f - s).abs() < 1e-9);
            }
        }
    }
}
