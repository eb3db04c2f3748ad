//! Named strategies selectable at runtime from scenario files and the CLI.

use std::sync::Arc;

use crate::cancel_decode::{DigitalCanceller, FrequencyDomainCanceller, NoCanceller};
use crate::dsp::SampleStream;
use crate::sync_est::{
    fit_si_best, refine_timing, subtract_si, synchronize_with, FineTiming, PssDetector, SyncResult,
    DETECTION_THRESHOLD,
};
use crate::waveform::{pss_root, FrameConfig};
use crate::{Error, Result};

/// What a receiver knows when it acquires timing.
pub struct SyncContext<'a> {
    /// Receiving node's configuration.
    pub cfg: &'a FrameConfig,
    pub rx: &'a SampleStream,
    /// The node's own baseband transmission (frames back to back from
    /// index 0), when it transmits while receiving.
    pub own_tx: Option<&'a SampleStream>,
}

/// Timing acquired by a sync strategy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Acquisition {
    pub sync: SyncResult,
    /// CP start of the first whole desired frame in the capture.
    pub desired_frame_start: Option<i64>,
    /// CP start of own frame 0 as seen through the SI path.
    pub si_frame_start: Option<i64>,
}

pub trait SyncStrategy: Send + Sync {
    fn name(&self) -> &'static str;
    fn acquire(&self, ctx: &SyncContext<'_>) -> Result<Acquisition>;
}

/// Map a post-PSS index, resolved to frame symbol 6 or 66, to the earliest
/// frame start at or after the capture start (half a CP of slack).
fn frame_start_from(cfg: &FrameConfig, rx: &SampleStream, fine: &FineTiming) -> i64 {
    let sl = cfg.symbol_len() as i64;
    let fl = cfg.frame_len_samples() as i64;
    let start = fine.index - fine.frame_symbol as i64 * sl;
    let slack = cfg.cp_len as i64 / 2;
    start - fl * (start - rx.start_index + slack).div_euclid(fl)
}

fn own_frame_start(cfg: &FrameConfig, fine: &FineTiming, own_tx: &SampleStream) -> i64 {
    // own frame f starts at own_tx.start_index + f * frame_len before the SI delay
    let sl = cfg.symbol_len() as i64;
    let fl = cfg.frame_len_samples() as i64;
    let start = fine.index - fine.frame_symbol as i64 * sl;
    start - fl * (start - own_tx.start_index + fl / 2).div_euclid(fl)
}

/// Plain dual PSS correlation on the raw capture. The RS of the symbol after
/// the detected PSS only decides which half-frame the peak belongs to; the
/// PSS index itself is kept.
#[derive(Debug, Default)]
pub struct DualPss;

impl SyncStrategy for DualPss {
    fn name(&self) -> &'static str {
        "dual_pss"
    }

    fn acquire(&self, ctx: &SyncContext<'_>) -> Result<Acquisition> {
        let cfg = ctx.cfg;
        let det = PssDetector::new(cfg)?;
        let sync = synchronize_with(&det, ctx.rx, pss_root(cfg.node_id), pss_root(cfg.peer_id()))?;
        let half = |index: i64, node: u8| -> Result<FineTiming> {
            let fine = refine_timing(cfg, ctx.rx, index, node)?;
            Ok(FineTiming { index, ..fine })
        };
        let desired_frame_start = if sync.desired_detected() {
            Some(frame_start_from(cfg, ctx.rx, &half(sync.desired_start_index, cfg.peer_id())?))
        } else {
            None
        };
        let si_frame_start = match ctx.own_tx {
            Some(tx) if sync.si_detected() => Some(own_frame_start(cfg, &half(sync.si_start_index, cfg.node_id)?, tx)),
            _ => None,
        };
        Ok(Acquisition { sync, desired_frame_start, si_frame_start })
    }
}

/// Largest residual-to-received power ratio for which an SI fit counts as
/// a detection.
pub const MAX_SI_RESIDUAL: f64 = 0.95;

/// Acquisition for a receiver whose own signal may dominate: locate the SI
/// with its PSS or on the node's own transmit clock, fit and subtract it in
/// the time domain using the known own transmission, then correlate for the
/// peer's PSS on the cleaned capture and refine that index to the sample on
/// the wideband RS.
#[derive(Debug, Default)]
pub struct SiSuppressed;

impl SyncStrategy for SiSuppressed {
    fn name(&self) -> &'static str {
        "si_suppressed"
    }

    fn acquire(&self, ctx: &SyncContext<'_>) -> Result<Acquisition> {
        let Some(own_tx) = ctx.own_tx else {
            return DualPss.acquire(ctx);
        };
        let cfg = ctx.cfg;
        let det = PssDetector::new(cfg)?;
        let own_root = pss_root(cfg.node_id);
        let peer_root = pss_root(cfg.peer_id());
        let filtered = det.lowpass(ctx.rx);
        let (si_coarse, si_peak) = det.detect(&filtered, own_root)?;
        let sl = cfg.symbol_len() as i64;
        let fl = cfg.frame_len_samples() as i64;
        // the node's own transmit clock: loopback with a short delay
        let mut candidates = vec![0];
        if si_peak >= DETECTION_THRESHOLD {
            // the coarse SI index is 6 or 66 symbols into some own frame
            let frames = (own_tx.len() as i64 / fl).max(1);
            for fs in cfg.pss_symbols().map(|s| s as i64 + 1) {
                let start = si_coarse - fs * sl;
                candidates.extend((0..frames).map(|f| start - f * fl - own_tx.start_index));
            }
        }
        let fit = fit_si_best(ctx.rx, own_tx, &candidates)?;
        if fit.residual_ratio > MAX_SI_RESIDUAL {
            return DualPss.acquire(ctx);
        }
        let cleaned = subtract_si(ctx.rx, own_tx, &fit);
        let si_fine = FineTiming {
            index: fit.strongest_delay() + own_tx.start_index + 6 * sl,
            frame_symbol: 6,
            quality: 1.0,
        };
        let (d_coarse, desired_peak) = det.detect(&det.lowpass(&cleaned), peer_root)?;
        let sync_base = SyncResult {
            desired_start_index: d_coarse,
            si_start_index: si_fine.index,
            desired_peak,
            si_peak,
        };
        if !sync_base.desired_detected() {
            return Ok(Acquisition {
                sync: sync_base,
                desired_frame_start: None,
                si_frame_start: Some(own_frame_start(cfg, &si_fine, own_tx)),
            });
        }
        let d_fine = refine_timing(cfg, &cleaned, d_coarse, cfg.peer_id())?;
        Ok(Acquisition {
            sync: SyncResult { desired_start_index: d_fine.index, ..sync_base },
            desired_frame_start: Some(frame_start_from(cfg, ctx.rx, &d_fine)),
            si_frame_start: Some(own_frame_start(cfg, &si_fine, own_tx)),
        })
    }
}

/// RS-refined PSS timing without SI suppression.
#[derive(Debug, Default)]
pub struct RsRefined;

impl SyncStrategy for RsRefined {
    fn name(&self) -> &'static str {
        "rs_refined"
    }

    fn acquire(&self, ctx: &SyncContext<'_>) -> Result<Acquisition> {
        let cfg = ctx.cfg;
        let det = PssDetector::new(cfg)?;
        let mut sync = synchronize_with(&det, ctx.rx, pss_root(cfg.node_id), pss_root(cfg.peer_id()))?;
        let mut desired_frame_start = None;
        let mut si_frame_start = None;
        if sync.desired_detected() {
            let f = refine_timing(cfg, ctx.rx, sync.desired_start_index, cfg.peer_id())?;
            sync.desired_start_index = f.index;
            desired_frame_start = Some(frame_start_from(cfg, ctx.rx, &f));
        }
        if let Some(tx) = ctx.own_tx.filter(|_| sync.si_detected()) {
            let f = refine_timing(cfg, ctx.rx, sync.si_start_index, cfg.node_id)?;
            sync.si_start_index = f.index;
            si_frame_start = Some(own_frame_start(cfg, &f, tx));
        }
        Ok(Acquisition { sync, desired_frame_start, si_frame_start })
    }
}

type Constructor<T> = fn() -> Arc<T>;

/// A name-to-constructor table for one kind of strategy.
pub struct Registry<T: ?Sized> {
    kind: &'static str,
    entries: Vec<(&'static str, Constructor<T>)>,
}

impl<T: ?Sized> Registry<T> {
    pub fn names(&self) -> Vec<&'static str> {
        self.entries.iter().map(|e| e.0).collect()
    }

    pub fn get(&self, name: &str) -> Result<Arc<T>> {
        self.entries
            .iter()
            .find(|e| e.0 == name)
            .map(|e| (e.1)())
            .ok_or_else(|| Error::UnknownStrategy {
                kind: self.kind,
                name: name.to_string(),
                available: self.names().join(", "),
            })
    }
}

pub fn sync_strategies() -> Registry<dyn SyncStrategy> {
    Registry {
        kind: "sync",
        entries: vec![
            ("dual_pss", || Arc::new(DualPss)),
            ("rs_refined", || Arc::new(RsRefined)),
            ("si_suppressed", || Arc::new(SiSuppressed)),
        ],
    }
}

pub fn digital_cancellers() -> Registry<dyn DigitalCanceller> {
    Registry {
        kind: "digital canceller",
        entries: vec![
            ("frequency_domain", || Arc::new(FrequencyDomainCanceller)),
            ("off", || Arc::new(NoCanceller)),
        ],
    }
}
