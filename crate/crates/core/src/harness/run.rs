use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::scenario::{channel_from, Scenario};
use crate::cancel_decode::{decode_frames, DecodedSymbol, OwnTx, ReceiveInputs};
use crate::dsp::{energy, mean_power, SampleStream};
use crate::frontend::{
    add_noise, adc_quantize, analog_cancel, apply_impairments, apply_passive_isolation, imd_limited_depth_db,
    tune_active_tap, AnalogCancelConfig,
};
use crate::metrics::{cancellation_depth_db, evm_percent, DuplexMode, ErrorCount, Goodput, LinkReport};
use crate::registry::{digital_cancellers, sync_strategies, Acquisition, SyncContext};
use crate::waveform::{
    build_frame, data_capacity, demod_window, layout_kind, ofdm_modulate, qam_demap, CellKind,
    FrameConfig, ResourceGrid,
};
use crate::{Result, Sample};

/// Samples used to tune the active analog tap.
pub const ACTIVE_PROBE_LEN: usize = 16_384;
/// Largest delay the active tap may take.
pub const ACTIVE_MAX_DELAY: usize = 32;
/// Silence captured after the last expected sample.
const CAPTURE_TAIL: usize = 1024;

/// Independent stream seed for (scenario seed, node, purpose).
pub fn derive_seed(seed: u64, node: u8, purpose: u64) -> u64 {
    let mut x = seed ^ (u64::from(node) << 56) ^ purpose.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    // splitmix64 finalizer
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

const PAYLOAD: u64 = 1;
const NOISE: u64 = 2;

/// A node's transmitted frames and the bits they carry.
#[derive(Debug, Clone)]
pub struct NodeTx {
    pub cfg: FrameConfig,
    pub frames: Vec<ResourceGrid>,
    pub bits: Vec<Vec<u8>>,
    /// Ideal baseband, frame 0 starting at index 0.
    pub baseband: SampleStream,
}

/// Seeded PRBS payload per node per frame.
pub fn node_tx(cfg: &FrameConfig, seed: u64, num_frames: usize) -> Result<NodeTx> {
    let n = data_capacity(cfg) * cfg.qam_order.bits_per_symbol();
    let mut frames = Vec::with_capacity(num_frames);
    let mut bits = Vec::with_capacity(num_frames);
    let mut samples = Vec::new();
    for f in 0..num_frames {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, cfg.node_id, PAYLOAD + 16 * f as u64));
        let b: Vec<u8> = (0..n).map(|_| rng.random_range(0..2u8)).collect();
        let g = build_frame(cfg, &b)?;
        samples.extend(ofdm_modulate(cfg, &g).samples);
        frames.push(g);
        bits.push(b);
    }
    Ok(NodeTx { cfg: cfg.clone(), frames, bits, baseband: SampleStream::new(0, samples) })
}

/// Signal components at one receiver, kept apart for ground-truth metrics.
#[derive(Debug, Clone)]
pub struct ReceiverCapture {
    /// Own transmission at the PA output.
    pub own_pa: Option<SampleStream>,
    /// SI after passive isolation and the SI channel, before the active tap.
    pub si_passive: Option<SampleStream>,
    /// SI entering the ADC.
    pub si_residual: Option<SampleStream>,
    pub desired: SampleStream,
    pub noise_power: f64,
    /// Digitized capture as the receiver sees it.
    pub rx: SampleStream,
    pub active_tap: Option<crate::frontend::ActiveTap>,
}

/// Analog front end of the receiver at `me`, whose peer transmits `peer_tx`.
pub fn capture(s: &Scenario, own: &NodeTx, peer: &NodeTx) -> Result<ReceiverCapture> {
    let cfg = &own.cfg;
    let len = s.num_frames * cfg.frame_len_samples() + s.peer_offset_samples as usize + CAPTURE_TAIL;
    let peer_pa = apply_impairments(&s.impairments, &peer.baseband);
    let peer_pa = SampleStream::new(peer_pa.start_index + s.peer_offset_samples, peer_pa.samples);
    let desired = channel_from(&s.desired_channel).convolve(&peer_pa).extract(0, len);

    let (own_pa, si_passive, si_residual, active_tap) = if s.is_full_duplex() {
        let own_pa = apply_impairments(&s.impairments, &own.baseband);
        let passive = apply_passive_isolation(s.analog.passive_isolation_db, &own_pa);
        let si_passive = channel_from(&s.si_channel).convolve(&passive);
        let mut analog: AnalogCancelConfig = s.analog;
        if analog.active_enabled && analog.auto_tune {
            let probe = si_passive.extract(si_passive.start_index, ACTIVE_PROBE_LEN.min(si_passive.len()));
            analog.active_tap = tune_active_tap(&own_pa, &probe, ACTIVE_MAX_DELAY)?;
        }
        let residual = analog_cancel(&analog, &si_passive, &own_pa).extract(0, len);
        let tap = analog.active_enabled.then_some(analog.active_tap);
        (Some(own_pa), Some(si_passive), Some(residual), tap)
    } else {
        (None, None, None, None)
    };

    let p_desired = mean_power(&peer_pa.samples) * channel_from(&s.desired_channel).power_gain();
    let noise_power = p_desired / 10f64.powf(s.snr_db / 10.0);
    let clean = match &si_residual {
        Some(si) => desired.add(si).extract(0, len),
        None => desired.clone(),
    };
    let noisy = add_noise(&clean, noise_power, derive_seed(s.seed, cfg.node_id, NOISE));
    let rx = digitize(s, &noisy);
    Ok(ReceiverCapture { own_pa, si_passive, si_residual, desired, noise_power, rx, active_tap })
}

/// ADC behind an ideal AGC: `adc_full_scale` is relative to the capture RMS.
fn digitize(s: &Scenario, x: &SampleStream) -> SampleStream {
    if s.impairments.adc_bits.is_none() {
        return x.clone();
    }
    let rms = mean_power(&x.samples).sqrt();
    if rms == 0.0 {
        return x.clone();
    }
    let q = adc_quantize(&s.impairments, &x.scaled(Sample::new(1.0 / rms, 0.0)));
    q.scaled(Sample::new(rms, 0.0))
}

/// Everything one receive direction produced.
#[derive(Debug, Clone)]
pub struct DirectionRun {
    pub capture: ReceiverCapture,
    pub acquisition: Option<Acquisition>,
    pub decoded: Vec<DecodedSymbol>,
    pub errors: ErrorCount,
    pub goodput: Goodput,
    pub evm_percent: f64,
    pub erased_cells: usize,
    /// Ground-truth residual SI + noise after digital cancellation vs SI at
    /// the digital input, over all decoded cells.
    pub digital_db: Option<f64>,
    /// Desired power over everything else after cancellation, data cells.
    pub post_cancel_sinr_db: Option<f64>,
    /// Mean SI power per used subcarrier before and after digital
    /// cancellation (ground truth, noise included after).
    pub digital_profile: Option<(Vec<f64>, Vec<f64>)>,
    pub failures: Vec<String>,
}

/// Receive chain at `own.cfg.node_id`.
pub fn run_direction(s: &Scenario, own: &NodeTx, peer: &NodeTx) -> Result<DirectionRun> {
    let cfg = &own.cfg;
    let cap = capture(s, own, peer)?;
    let elapsed = s.num_frames as f64 * cfg.frame_duration_s();
    let payload_bits: u64 = peer.bits.iter().map(|b| b.len() as u64).sum();
    let mut failures = Vec::new();
    let strategy = sync_strategies().get(&s.sync)?;
    let canceller = digital_cancellers().get(&s.digital_canceller)?;
    let ctx = SyncContext {
        cfg,
        rx: &cap.rx,
        own_tx: s.is_full_duplex().then_some(&own.baseband),
    };
    let failed = |cap: ReceiverCapture, acq: Option<Acquisition>, failures: Vec<String>| DirectionRun {
        capture: cap,
        acquisition: acq,
        decoded: Vec::new(),
        errors: ErrorCount::lost(payload_bits),
        goodput: Goodput { correct_bits: 0, elapsed_s: elapsed },
        evm_percent: f64::NAN,
        erased_cells: 0,
        digital_db: None,
        post_cancel_sinr_db: None,
        digital_profile: None,
        failures,
    };
    let acq = match strategy.acquire(&ctx) {
        Ok(a) => a,
        Err(e) => {
            failures.push(format!("node {}: {e}", cfg.node_id));
            return Ok(failed(cap, None, failures));
        }
    };
    let Some(desired_frame_start) = acq.desired_frame_start else {
        failures.push(format!(
            "node {}: peer PSS not detected (peak {:.3})",
            cfg.node_id, acq.sync.desired_peak
        ));
        return Ok(failed(cap, Some(acq), failures));
    };
    if s.is_full_duplex() && acq.si_frame_start.is_none() {
        failures.push(format!("node {}: SI timing not acquired; decoding without digital cancellation", cfg.node_id));
    }
    let decoded = decode_frames(&ReceiveInputs {
        cfg,
        peer_cfg: &peer.cfg,
        rx: &cap.rx,
        desired_frame_start,
        si_frame_start: if s.is_full_duplex() { acq.si_frame_start } else { None },
        own_tx: OwnTx { frames: &own.frames },
        num_frames: s.num_frames,
        canceller: canceller.as_ref(),
        reference: Some(&peer.frames),
    })?;

    let pcfg = &peer.cfg;
    let spf = pcfg.symbols_per_frame();
    let bps = pcfg.qam_order.bits_per_symbol();
    let mut errors = ErrorCount::default();
    let mut z_all = Vec::new();
    let mut r_all = Vec::new();
    let mut erased_cells = 0;
    let (mut d_pow, mut d_resid) = (0.0, 0.0);
    let mut prof_before = vec![0.0; cfg.used_subcarriers];
    let mut prof_after = vec![0.0; cfg.used_subcarriers];
    let mut prof_count = 0usize;
    let n = cfg.fft_size;
    for sym in &decoded {
        let frame = &peer.frames[sym.index / spf];
        let fs = sym.frame_symbol;
        let data: Vec<usize> = (0..pcfg.used_subcarriers)
            .filter(|&u| layout_kind(pcfg, fs, u) == CellKind::Data)
            .collect();
        let reference: Vec<Sample> = data.iter().map(|&u| frame.value(fs, u)).collect();
        let tx_bits = qam_demap(&reference, pcfg.qam_order);
        if let Some(e) = &sym.error {
            failures.push(format!("node {} symbol {}: {e}", cfg.node_id, sym.index));
            errors = errors.merge(ErrorCount::lost(tx_bits.len() as u64));
            continue;
        }
        for (i, z) in sym.equalized.iter().enumerate() {
            let t = &tx_bits[i * bps..(i + 1) * bps];
            if sym.erased[i] {
                erased_cells += 1;
                continue;
            }
            errors = errors.merge(ErrorCount::tally(t, &sym.bits[i * bps..(i + 1) * bps], bps));
            z_all.push(*z);
            r_all.push(reference[i]);
        }
        // ground truth through the same FFT window
        let y_d = demod_window(cfg, cap.desired.window(sym.window_start, n)?);
        if let Some(si) = &cap.si_residual {
            let y_si = demod_window(cfg, si.window(sym.window_start, n)?);
            for u in 0..cfg.used_subcarriers {
                prof_before[u] += y_si[u].norm_sqr();
                prof_after[u] += (sym.cleaned[u] - y_d[u]).norm_sqr();
            }
            prof_count += 1;
        }
        for &u in &data {
            d_pow += y_d[u].norm_sqr();
            d_resid += (sym.cleaned[u] - y_d[u]).norm_sqr();
        }
    }
    let evm = if z_all.is_empty() { f64::NAN } else { evm_percent(&z_all, &r_all)? };
    let si_before: f64 = prof_before.iter().sum();
    let si_after: f64 = prof_after.iter().sum();
    let digital_db = if s.is_full_duplex() && si_before > 0.0 {
        Some(cancellation_depth_db(si_before, si_after)?)
    } else {
        None
    };
    let post_cancel_sinr_db = (d_pow > 0.0).then(|| cancellation_depth_db(d_pow, d_resid)).transpose()?;
    Ok(DirectionRun {
        capture: cap,
        acquisition: Some(acq),
        goodput: Goodput { correct_bits: errors.correct_symbol_bits, elapsed_s: elapsed },
        errors,
        decoded,
        evm_percent: evm,
        erased_cells,
        digital_db,
        post_cancel_sinr_db,
        digital_profile: (prof_count > 0).then(|| {
            let avg = |v: Vec<f64>| v.into_iter().map(|p| p / prof_count as f64).collect();
            (avg(prof_before), avg(prof_after))
        }),
        failures,
    })
}

/// Both receive directions of one scenario.
#[derive(Debug, Clone)]
pub struct ScenarioRun {
    pub report: LinkReport,
    /// Node 0 receiving node 1.
    pub observed: Option<DirectionRun>,
    /// Node 1 receiving node 0.
    pub reverse: Option<DirectionRun>,
    pub post_cancel_sinr_db: Option<f64>,
    pub erased_cells: usize,
}

/// Run a scenario end to end. Failures inside the chain are recorded in the
/// report; only an invalid scenario is an error.
pub fn run_scenario(s: &Scenario) -> Result<LinkReport> {
    Ok(run_scenario_detailed(s)?.report)
}

pub fn run_scenario_detailed(s: &Scenario) -> Result<ScenarioRun> {
    s.validate()?;
    let node0 = node_tx(&s.node_cfg(0), s.seed, s.num_frames)?;
    let node1 = node_tx(&s.node_cfg(1), s.seed, s.num_frames)?;
    let mode = if s.is_full_duplex() { DuplexMode::Full } else { DuplexMode::FddBaseline };
    let mut report = LinkReport {
        scenario_id: s.id.clone(),
        seed: s.seed,
        duplex_mode: mode,
        qam_order: s.qam_up,
        snr_db: s.snr_db,
        analog_passive_db: None,
        analog_total_db: None,
        digital_db: None,
        total_cancellation_db: None,
        evm_percent: f64::NAN,
        ber: 0.5,
        throughput_bps: 0.0,
        desired_start_index: None,
        si_start_index: None,
        imd_limited_db: None,
        errors: Vec::new(),
    };
    let run = |own: &NodeTx, peer: &NodeTx| -> (Option<DirectionRun>, Option<String>) {
        match run_direction(s, own, peer) {
            Ok(r) => (Some(r), None),
            Err(e) => (None, Some(format!("node {}: {e}", own.cfg.node_id))),
        }
    };
    let ((observed, e0), (reverse, e1)) = rayon::join(|| run(&node0, &node1), || run(&node1, &node0));
    report.errors.extend(e0.into_iter().chain(e1));
    let mut goodput = Goodput::default();
    let mut post_cancel_sinr_db = None;
    let mut erased_cells = 0;
    if let Some(o) = &observed {
        report.evm_percent = o.evm_percent;
        report.ber = o.errors.ber();
        report.digital_db = o.digital_db;
        report.desired_start_index = o.acquisition.map(|a| a.sync.desired_start_index);
        report.si_start_index = o.acquisition.filter(|_| s.is_full_duplex()).map(|a| a.sync.si_start_index);
        let c = &o.capture;
        if let (Some(pa), Some(passive), Some(resid)) = (&c.own_pa, &c.si_passive, &c.si_residual) {
            let tx_e = energy(&pa.samples);
            report.analog_passive_db = cancellation_depth_db(tx_e, energy(&passive.samples)).ok();
            let resid_e = energy(&resid.extract(passive.start_index, passive.len()).samples);
            report.analog_total_db = cancellation_depth_db(tx_e, resid_e).ok();
        }
        report.total_cancellation_db = match (report.analog_total_db, report.digital_db) {
            (Some(a), Some(d)) => Some(a + d),
            _ => None,
        };
        post_cancel_sinr_db = o.post_cancel_sinr_db;
        erased_cells = o.erased_cells;
        report.errors.extend(o.failures.iter().cloned());
        goodput = goodput.concurrent(o.goodput);
    }
    if let Some(r) = &reverse {
        report.errors.extend(r.failures.iter().cloned());
        goodput = goodput.concurrent(r.goodput);
    }
    report.throughput_bps = goodput.throughput_bps();
    if s.is_full_duplex() {
        report.imd_limited_db = imd_limited_depth_db(&s.impairments.pa_model, &node0.baseband.samples);
    }
    Ok(ScenarioRun { report, observed, reverse, post_cancel_sinr_db, erased_cells })
}

/// Goodput of an error-free run, from the frame layout alone.
pub fn ideal_throughput_bps(s: &Scenario) -> f64 {
    let bits: usize = [0u8, 1]
        .iter()
        .map(|&n| {
            let c = s.node_cfg(n);
            data_capacity(&c) * c.qam_order.bits_per_symbol()
        })
        .sum();
    bits as f64 / s.node_cfg(0).frame_duration_s()
}
