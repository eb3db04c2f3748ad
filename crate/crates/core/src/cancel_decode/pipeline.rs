use std::collections::HashMap;
use std::sync::mpsc::{sync_channel, Receiver, SyncSender};
use std::thread;

use super::canceller::{zf_equalize, CancellerState, OwnTx};
use crate::dsp::SampleStream;
use crate::sync_est::{interpolate_linear, EstimateKind, SparseEstimate};
use crate::waveform::{
    demod_window, layout_kind, phase_ramp, qam_demap, qam_points, CellKind, FrameConfig,
    ResourceGrid, RsPattern,
};
use crate::{Result, Sample};

/// Depth of the FIFOs between pipeline stages.
pub const QUEUE_DEPTH: usize = 4;

/// FFT windows start this many samples inside the CP of the earlier of the
/// desired and SI symbols (but never before the later one starts), leaving
/// margin for timing error.
pub const WINDOW_BACKOFF: i64 = 16;

/// Frequency-domain SI canceller applied per OFDM symbol.
pub trait DigitalCanceller: Send + Sync {
    fn name(&self) -> &'static str;
    /// `y` is the received symbol, `x_own` the counter-selected own symbol,
    /// `h_intra` the intra-node estimate (phase ramp already applied).
    fn cancel(&self, y: &[Sample], x_own: &[Sample], h_intra: &[Sample]) -> Vec<Sample>;
}

/// One received OFDM symbol after the full chain.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodedSymbol {
    /// Running symbol index from the first decoded frame.
    pub index: usize,
    pub frame_symbol: usize,
    pub window_start: i64,
    /// Own symbol the counter paired with this one, if SI is present.
    pub si_counter: Option<i64>,
    /// Post-cancellation frequency-domain symbol on every used subcarrier.
    pub cleaned: Vec<Sample>,
    /// Equalized data cells in subcarrier order.
    pub equalized: Vec<Sample>,
    pub erased: Vec<bool>,
    /// Hard decisions, `bits_per_symbol` per data cell.
    pub bits: Vec<u8>,
    pub evm_db: f64,
    /// Set when the symbol could not be processed; other fields are empty.
    pub error: Option<String>,
}

/// Everything the receive chain needs for one capture.
pub struct ReceiveInputs<'a> {
    /// Receiving node's configuration.
    pub cfg: &'a FrameConfig,
    /// Transmitting peer's configuration (its layout and QAM order).
    pub peer_cfg: &'a FrameConfig,
    pub rx: &'a SampleStream,
    /// CP start of the first desired frame's symbol 0.
    pub desired_frame_start: i64,
    /// CP start of own frame 0 symbol 0 as seen through the SI path.
    pub si_frame_start: Option<i64>,
    pub own_tx: OwnTx<'a>,
    pub num_frames: usize,
    pub canceller: &'a dyn DigitalCanceller,
    /// Transmitted peer frames, for data-aided EVM.
    pub reference: Option<&'a [ResourceGrid]>,
}

struct Demodulated {
    index: usize,
    window_start: i64,
    counter: Option<i64>,
    y: Vec<Sample>,
    adv_desired: i64,
    adv_si: i64,
}

struct Cleaned {
    base: Demodulated,
    cleaned: Vec<Sample>,
    h_inter: Vec<Sample>,
}

enum Msg<T> {
    Ok(T),
    Failed { index: usize, window_start: i64, counter: Option<i64>, error: String },
}

/// Per-symbol receive pipeline: demodulate, estimate and cancel, equalize
/// and demap. Stages run on their own threads joined by bounded queues;
/// symbols come out in order.
pub fn decode_frames(inp: &ReceiveInputs<'_>) -> Result<Vec<DecodedSymbol>> {
    inp.cfg.validate()?;
    let total = inp.num_frames * inp.cfg.symbols_per_frame();
    let (tx_a, rx_a) = sync_channel::<Msg<Demodulated>>(QUEUE_DEPTH);
    let (tx_b, rx_b) = sync_channel::<Msg<Cleaned>>(QUEUE_DEPTH);
    let out = thread::scope(|s| {
        s.spawn(|| demod_stage(inp, total, tx_a));
        s.spawn(|| cancel_stage(inp, rx_a, tx_b));
        decode_stage(inp, rx_b)
    });
    debug_assert_eq!(out.len(), total);
    Ok(out)
}

fn demod_stage(inp: &ReceiveInputs<'_>, total: usize, out: SyncSender<Msg<Demodulated>>) {
    let cfg = inp.cfg;
    let sl = cfg.symbol_len() as i64;
    let cp = cfg.cp_len as i64;
    // the counter's starting point: own symbol nearest in time to desired symbol 0
    let first_counter = inp
        .si_frame_start
        .map(|si| ((inp.desired_frame_start - si) as f64 / sl as f64).round() as i64);
    let mut state = first_counter.map(|c| CancellerState::new(inp.si_frame_start.unwrap_or(0), c));
    for index in 0..total {
        let s_d = inp.desired_frame_start + index as i64 * sl;
        let s_si = state
            .as_ref()
            .map(|st| st.si_start_index + st.counter() * sl);
        let earliest = s_si.map_or(s_d, |s| s.min(s_d));
        let latest = s_si.map_or(s_d, |s| s.max(s_d));
        let w = (earliest + cp - WINDOW_BACKOFF).max(latest);
        let counter = state.as_ref().map(|st| st.counter());
        let msg = match inp.rx.window(w, cfg.fft_size) {
            Ok(win) => Msg::Ok(Demodulated {
                index,
                window_start: w,
                counter,
                y: demod_window(cfg, win),
                adv_desired: s_d + cp - w,
                adv_si: s_si.map_or(0, |s| s + cp - w),
            }),
            Err(e) => Msg::Failed { index, window_start: w, counter, error: e.to_string() },
        };
        if out.send(msg).is_err() {
            return;
        }
        if let Some(st) = state.as_mut() {
            st.advance();
        }
    }
}

/// LS at the RS cells of `pattern` after removing the known phase ramp,
/// interpolated and returned without the ramp.
fn estimate_symbol(
    cfg: &FrameConfig,
    pattern: &RsPattern,
    frame_symbol: usize,
    y: &[Sample],
    ramp: &[Sample],
) -> Result<Vec<Sample>> {
    let cells = pattern
        .subcarriers()
        .map(|u| {
            let x = pattern.value_at(frame_symbol, u).expect("RS symbol");
            (u, y[u] / (x * ramp[u]))
        })
        .collect();
    let sparse = SparseEstimate { frame_symbol, cells };
    Ok(interpolate_linear(&sparse, cfg, EstimateKind::InterNode)?.h)
}

fn cancel_stage(inp: &ReceiveInputs<'_>, input: Receiver<Msg<Demodulated>>, out: SyncSender<Msg<Cleaned>>) {
    let cfg = inp.cfg;
    let spf = cfg.symbols_per_frame();
    let peer_rs = RsPattern::new(cfg, cfg.peer_id());
    let own_rs = RsPattern::new(cfg, cfg.node_id);
    let mut ramps: HashMap<i64, Vec<Sample>> = HashMap::new();
    let mut inter: Option<Vec<Sample>> = None;
    let mut intra: Option<Vec<Sample>> = None;
    for msg in input {
        let d = match msg {
            Msg::Ok(d) => d,
            Msg::Failed { index, window_start, counter, error } => {
                if out.send(Msg::Failed { index, window_start, counter, error }).is_err() {
                    return;
                }
                continue;
            }
        };
        let ramp_d = ramps.entry(d.adv_desired).or_insert_with(|| phase_ramp(cfg, d.adv_desired)).clone();
        let ramp_si = ramps.entry(d.adv_si).or_insert_with(|| phase_ramp(cfg, d.adv_si)).clone();
        let result = (|| -> std::result::Result<(Vec<Sample>, Vec<Sample>), String> {
            let fs_d = d.index % spf;
            if peer_rs.is_rs_symbol(fs_d) {
                inter = Some(estimate_symbol(cfg, &peer_rs, fs_d, &d.y, &ramp_d).map_err(|e| e.to_string())?);
            }
            let cleaned = match d.counter {
                None => d.y.clone(),
                Some(c) => {
                    let x_own = inp.own_tx.symbol(c).map_err(|e| e.to_string())?;
                    let fs_si = c.rem_euclid(spf as i64) as usize;
                    if own_rs.is_rs_symbol(fs_si) {
                        intra = Some(estimate_symbol(cfg, &own_rs, fs_si, &d.y, &ramp_si).map_err(|e| e.to_string())?);
                    }
                    let h = intra.as_ref().ok_or("no intra-node estimate yet")?;
                    let h_eff: Vec<Sample> = h.iter().zip(&ramp_si).map(|(h, r)| h * r).collect();
                    inp.canceller.cancel(&d.y, x_own, &h_eff)
                }
            };
            let h = inter.as_ref().ok_or("no inter-node estimate yet")?;
            Ok((cleaned, h.iter().zip(&ramp_d).map(|(h, r)| h * r).collect()))
        })();
        let msg = match result {
            Ok((cleaned, h_inter)) => Msg::Ok(Cleaned {
                base: Demodulated { y: Vec::new(), ..d },
                cleaned,
                h_inter,
            }),
            Err(error) => Msg::Failed {
                index: d.index,
                window_start: d.window_start,
                counter: d.counter,
                error,
            },
        };
        if out.send(msg).is_err() {
            return;
        }
    }
}

fn decode_stage(inp: &ReceiveInputs<'_>, input: Receiver<Msg<Cleaned>>) -> Vec<DecodedSymbol> {
    let peer = inp.peer_cfg;
    let spf = peer.symbols_per_frame();
    let order = peer.qam_order;
    let bps = order.bits_per_symbol();
    let points = qam_points(order);
    let mut out = Vec::new();
    for msg in input {
        let c = match msg {
            Msg::Ok(c) => c,
            Msg::Failed { index, window_start, counter, error } => {
                out.push(DecodedSymbol {
                    index,
                    frame_symbol: index % spf,
                    window_start,
                    si_counter: counter,
                    cleaned: Vec::new(),
                    equalized: Vec::new(),
                    erased: Vec::new(),
                    bits: Vec::new(),
                    evm_db: f64::NAN,
                    error: Some(error),
                });
                continue;
            }
        };
        let index = c.base.index;
        let fs = index % spf;
        let eq = zf_equalize(&c.cleaned, &c.h_inter);
        let data: Vec<usize> = (0..peer.used_subcarriers)
            .filter(|&u| layout_kind(peer, fs, u) == CellKind::Data)
            .collect();
        let equalized: Vec<Sample> = data.iter().map(|&u| eq.values[u]).collect();
        let erased: Vec<bool> = data.iter().map(|&u| eq.erased[u]).collect();
        let bits = qam_demap(&equalized, order);
        let reference: Vec<Sample> = match inp.reference.and_then(|r| r.get(index / spf)) {
            Some(g) => data.iter().map(|&u| g.value(fs, u)).collect(),
            None => bits
                .chunks_exact(bps)
                .map(|b| points[b.iter().fold(0usize, |acc, &v| (acc << 1) | v as usize)])
                .collect(),
        };
        let (mut err, mut sig) = (0.0, 0.0);
        for i in 0..equalized.len() {
            if !erased[i] {
                err += (equalized[i] - reference[i]).norm_sqr();
                sig += reference[i].norm_sqr();
            }
        }
        let evm_db = if sig > 0.0 { 10.0 * (err / sig).log10() } else { f64::NAN };
        out.push(DecodedSymbol {
            index,
            frame_symbol: fs,
            window_start: c.base.window_start,
            si_counter: c.base.counter,
            cleaned: c.cleaned,
            equalized,
            erased,
            bits,
            evm_db,
            error: None,
        });
    }
    out
}
