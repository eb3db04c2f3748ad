use std::f64::consts::PI;

use crate::dsp::{design_lowpass, fir_apply, sliding_xcorr, FirFilter, FirSpec, SampleStream};
use crate::waveform::{demod_window, generate_pss, symbol_to_time, FrameConfig, RsPattern};
use crate::{Error, Result, Sample};

/// Normalized (power) correlation peak needed to declare a detection.
pub const DETECTION_THRESHOLD: f64 = 0.2;

/// Samples the fine-timing FFT window is pulled into the cyclic prefix.
pub const FINE_TIMING_BACKOFF: i64 = 32;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyncResult {
    /// First sample of the symbol following the peer's PSS symbol.
    pub desired_start_index: i64,
    /// First sample of the symbol following the node's own PSS symbol, as
    /// it arrives through the SI path.
    pub si_start_index: i64,
    pub desired_peak: f64,
    pub si_peak: f64,
}

impl SyncResult {
    pub fn desired_detected(&self) -> bool {
        self.desired_peak >= DETECTION_THRESHOLD
    }

    pub fn si_detected(&self) -> bool {
        self.si_peak >= DETECTION_THRESHOLD
    }
}

/// PSS correlator: the 1.4 MHz LPF plus time-domain templates for both roots.
#[derive(Debug, Clone)]
pub struct PssDetector {
    cfg: FrameConfig,
    filter: FirFilter,
}

impl PssDetector {
    pub fn new(cfg: &FrameConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            cfg: cfg.clone(),
            filter: design_lowpass(&FirSpec::pss_lowpass(cfg.sample_rate_hz))?,
        })
    }

    pub fn filter(&self) -> &FirFilter {
        &self.filter
    }

    /// One OFDM symbol (CP included) carrying only the PSS of `root`.
    pub fn template(&self, root: u32) -> Result<Vec<Sample>> {
        let pss = generate_pss(root)?;
        let mut used = vec![Sample::new(0.0, 0.0); self.cfg.used_subcarriers];
        for (k, v) in pss.iter() {
            if let Some(u) = self.cfg.used_index_of(k) {
                used[u] = v;
            }
        }
        Ok(symbol_to_time(&self.cfg, &used))
    }

    /// Group-delay-corrected low-pass output.
    pub fn lowpass(&self, rx: &SampleStream) -> SampleStream {
        fir_apply(&self.filter, rx)
    }

    /// Best peak of `root` in an already filtered stream: returns the index
    /// of the first sample after the PSS symbol and the peak value. Earliest
    /// index wins a tie.
    pub fn detect(&self, filtered: &SampleStream, root: u32) -> Result<(i64, f64)> {
        let template = self.template(root)?;
        let corr = sliding_xcorr(&filtered.samples, &template)?;
        let mut best = (0usize, -1.0f64);
        for (lag, &v) in corr.iter().enumerate() {
            if v > best.1 {
                best = (lag, v);
            }
        }
        if best.1 < 0.0 {
            return Ok((filtered.start_index, 0.0));
        }
        Ok((
            filtered.start_index + best.0 as i64 + self.cfg.symbol_len() as i64,
            best.1,
        ))
    }
}

/// Dual PSS synchronization: one correlation per root on the low-passed
/// stream. The desired index uses `peer_root`, the SI index `own_root`.
pub fn synchronize(
    cfg: &FrameConfig,
    rx: &SampleStream,
    own_root: u32,
    peer_root: u32,
) -> Result<SyncResult> {
    let det = PssDetector::new(cfg)?;
    synchronize_with(&det, rx, own_root, peer_root)
}

pub fn synchronize_with(
    det: &PssDetector,
    rx: &SampleStream,
    own_root: u32,
    peer_root: u32,
) -> Result<SyncResult> {
    let half = det.cfg.half_frame_len_samples();
    if rx.len() < half {
        return Err(Error::Truncation {
            start: rx.start_index,
            needed: half,
            available: rx.len(),
        });
    }
    let filtered = det.lowpass(rx);
    let (desired_start_index, desired_peak) = det.detect(&filtered, peer_root)?;
    let (si_start_index, si_peak) = det.detect(&filtered, own_root)?;
    let result = SyncResult {
        desired_start_index,
        si_start_index,
        desired_peak,
        si_peak,
    };
    if !result.desired_detected() && !result.si_detected() {
        return Err(Error::SyncFailure {
            desired_peak,
            si_peak,
        });
    }
    Ok(result)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FineTiming {
    /// Refined start of the symbol following the PSS symbol.
    pub index: i64,
    /// 6 or 66: which half-frame's post-PSS symbol the index belongs to.
    pub frame_symbol: usize,
    /// Normalized peak of the RS delay profile, in `[0, 1]`.
    pub quality: f64,
}

/// Refine a coarse post-PSS index with the wideband RS of `node` in the
/// symbol that follows the PSS. The window is pulled
/// [`FINE_TIMING_BACKOFF`] samples into the CP; the delay profile over the
/// RS comb then locates the symbol start to the sample, and comparing the
/// two half-frames' RS values resolves which PSS was found.
pub fn refine_timing(
    cfg: &FrameConfig,
    rx: &SampleStream,
    coarse_index: i64,
    node: u8,
) -> Result<FineTiming> {
    let n = cfg.fft_size;
    let w = coarse_index + cfg.cp_len as i64 - FINE_TIMING_BACKOFF;
    let y = demod_window(cfg, rx.window(w, n)?);
    let pattern = RsPattern::new(cfg, node);
    let search = (2 * FINE_TIMING_BACKOFF) as usize;
    let mut best: Option<FineTiming> = None;
    for frame_symbol in cfg.pss_symbols().map(|s| s + 1) {
        let cells: Vec<(i32, Sample)> = pattern
            .subcarriers()
            .map(|u| {
                let x = pattern.value_at(frame_symbol, u).expect("post-PSS symbol carries RS");
                (cfg.subcarrier_of(u), y[u] * x.conj())
            })
            .collect();
        let energy: f64 = cells.iter().map(|(_, z)| z.norm_sqr()).sum();
        if energy == 0.0 {
            continue;
        }
        for tau in 0..=search {
            let c: Sample = cells
                .iter()
                .map(|&(k, z)| {
                    let r = (k as i64 * tau as i64).rem_euclid(n as i64) as f64;
                    z * Sample::from_polar(1.0, 2.0 * PI * r / n as f64)
                })
                .sum();
            let quality = c.norm_sqr() / (energy * cells.len() as f64);
            if best.is_none_or(|b| quality > b.quality) {
                best = Some(FineTiming {
                    index: coarse_index - FINE_TIMING_BACKOFF + tau as i64,
                    frame_symbol,
                    quality,
                });
            }
        }
    }
    best.ok_or(Error::SyncFailure {
        desired_peak: 0.0,
        si_peak: 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::add_noise;
    use crate::waveform::{build_frame, data_capacity, ofdm_modulate, pss_root, QamOrder};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn frame_stream(cfg: &FrameConfig, seed: u64) -> SampleStream {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bits: Vec<u8> = (0..data_capacity(cfg) * cfg.qam_order.bits_per_symbol())
            .map(|_| rng.random_range(0..2))
            .collect();
        ofdm_modulate(cfg, &build_frame(cfg, &bits).unwrap())
    }

    #[test]
    fn zeros_fail() {
        let cfg = FrameConfig::fd_20mhz(QamOrder::Qpsk, 0);
        let rx = SampleStream::zeros(0, cfg.half_frame_len_samples() + 4000);
        assert!(matches!(
            synchronize(&cfg, &rx, 25, 29),
            Err(Error::SyncFailure { .. })
        ));
    }

    #[test]
    fn short_capture_rejected() {
        let cfg = FrameConfig::fd_20mhz(QamOrder::Qpsk, 0);
        let rx = SampleStream::zeros(0, 1000);
        assert!(matches!(
            synchronize(&cfg, &rx, 25, 29),
            Err(Error::Truncation { .. })
        ));
    }

    #[test]
    fn loopback_offset_recovered_exactly() {
        let cfg = FrameConfig::fd_20mhz(QamOrder::Qam16, 0);
        let det = PssDetector::new(&cfg).unwrap();
        let tx = frame_stream(&cfg, 1);
        let sl = cfg.symbol_len() as i64;
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..10 {
            let d: i64 = rng.random_range(0..20_000);
            let rx = SampleStream::new(d, tx.samples.clone())
                .extract(0, cfg.half_frame_len_samples() + 30_000);
            let r = synchronize_with(&det, &rx, pss_root(0), pss_root(1)).unwrap();
            assert_eq!(r.si_start_index, d + 6 * sl);
            assert!(r.si_peak > 0.8);
            assert!(!r.desired_detected());
        }
    }

    #[test]
    fn fine_timing_resolves_half_frame() {
        let cfg = FrameConfig::fd_20mhz(QamOrder::Qpsk, 1);
        let tx = frame_stream(&cfg, 3);
        let sl = cfg.symbol_len() as i64;
        let d = 1234;
        let rx = SampleStream::new(d, tx.samples.clone());
        let rx = add_noise(&rx, crate::dsp::mean_power(&rx.samples), 9);
        for (sym, err) in [(6i64, 3i64), (66, -4)] {
            let f = refine_timing(&cfg, &rx, d + sym * sl + err, 1).unwrap();
            assert_eq!(f.index, d + sym * sl);
            assert_eq!(f.frame_symbol, sym as usize);
        }
    }
}
