//! Invariant checks runnable from the CLI without any calibration.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cancel_decode::{cancel_digital, decode_frames, FrequencyDomainCanceller, OwnTx, ReceiveInputs};
use crate::dsp::{design_lowpass, dft, energy, FirSpec, SampleStream};
use crate::harness::{node_tx, run_suite, Scenario, SuiteOptions, TapSpec};
use crate::metrics::cancellation_depth_db;
use crate::sync_est::{interpolate_linear, ls_estimate_rs, EstimateKind, SparseEstimate};
use crate::waveform::{demod_window, ofdm_demodulate, FrameConfig, Profile, QamOrder, RsPattern};
use crate::{Result, Sample};

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, r: Result<(bool, String)>) -> Check {
    match r {
        Ok((passed, detail)) => Check { name, passed, detail },
        Err(e) => Check { name, passed: false, detail: format!("error: {e}") },
    }
}

fn random_vec(n: usize, seed: u64) -> Vec<Sample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| Sample::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect()
}

fn parseval() -> Result<(bool, String)> {
    let mut worst = 0.0f64;
    for (i, n) in [64usize, 1024, 2048].into_iter().enumerate() {
        let x = random_vec(n, i as u64);
        let rel = (energy(&dft(&x, n)?) / n as f64 - energy(&x)).abs() / energy(&x);
        worst = worst.max(rel);
    }
    Ok((worst <= 1e-9, format!("worst relative energy error {worst:.2e}")))
}

fn ofdm_round_trip() -> Result<(bool, String)> {
    let mut worst = 0.0f64;
    for profile in [Profile::Fd20Mhz, Profile::Fdd10Mhz] {
        let cfg = FrameConfig::new(profile, QamOrder::Qam16, 0);
        let tx = node_tx(&cfg, 7, 1)?;
        let rx = ofdm_demodulate(&cfg, &tx.baseband, 0, 0, cfg.symbols_per_frame())?;
        for row in 0..cfg.symbols_per_frame() {
            for (a, b) in rx.row(row).iter().zip(tx.frames[0].row(row)) {
                worst = worst.max((a - b).norm());
            }
        }
    }
    Ok((worst <= 1e-9, format!("worst cell error {worst:.2e}")))
}

fn ls_exact() -> Result<(bool, String)> {
    let cfg = FrameConfig::fd_20mhz(QamOrder::Qpsk, 0);
    let tx = node_tx(&cfg, 8, 1)?;
    let h: Vec<Sample> = random_vec(cfg.used_subcarriers, 9);
    let mut grid = tx.frames[0].clone();
    for row in 0..grid.num_symbols {
        for u in 0..cfg.used_subcarriers {
            let v = grid.value(row, u) * h[u];
            grid.set_value(row, u, v);
        }
    }
    let pattern = RsPattern::new(&cfg, 0);
    let mut worst = 0.0f64;
    for est in ls_estimate_rs(&grid, &pattern, cfg.symbols_per_frame()) {
        for (u, v) in est.cells {
            worst = worst.max((v - h[u]).norm());
        }
    }
    Ok((worst <= 1e-12, format!("worst RS-cell error {worst:.2e}")))
}

fn interpolator_affine() -> Result<(bool, String)> {
    let cfg = FrameConfig::fd_20mhz(QamOrder::Qpsk, 0);
    let pattern = RsPattern::new(&cfg, 1);
    let (a, b) = (Sample::new(0.3, -0.2), Sample::new(1e-3, 2e-3));
    let f = |u: usize| a + b * cfg.subcarrier_of(u) as f64;
    let sparse = SparseEstimate { frame_symbol: 0, cells: pattern.subcarriers().map(|u| (u, f(u))).collect() };
    let est = interpolate_linear(&sparse, &cfg, EstimateKind::InterNode)?;
    let first = pattern.subcarriers().min().unwrap_or(0);
    let last = pattern.subcarriers().max().unwrap_or(0);
    let worst = (first..=last).map(|u| (est.h[u] - f(u)).norm()).fold(0.0, f64::max);
    Ok((worst <= 1e-12, format!("worst in-span error {worst:.2e}")))
}

fn subtraction_linearity() -> Result<(bool, String)> {
    let y = random_vec(4096, 10);
    let s = random_vec(4096, 11);
    let c = cancel_digital(&y, &s);
    let worst = (0..y.len()).map(|i| (c[i] + s[i] - y[i]).norm()).fold(0.0, f64::max);
    Ok((worst <= 1e-15, format!("worst |cancel(Y,S)+S-Y| {worst:.2e}")))
}

/// Ground-truth digital depth (dB) for SI arriving `delta` samples before
/// the desired signal, noise-free, single-path SI.
pub fn misalignment_depth_db(delta: i64) -> Result<f64> {
    let me = FrameConfig::fd_20mhz(QamOrder::Qpsk, 0);
    let own = node_tx(&me, 21, 1)?;
    let peer = node_tx(&FrameConfig::fd_20mhz(QamOrder::Qam16, 1), 22, 1)?;
    let si_start = 1000;
    let d_start = si_start + delta;
    let len = me.frame_len_samples() + d_start as usize + 4096;
    let si = SampleStream::new(si_start, own.baseband.scaled(Sample::from_polar(3.0, 0.4)).samples).extract(0, len);
    let desired = SampleStream::new(d_start, peer.baseband.samples.clone()).extract(0, len);
    let rx = si.add(&desired);
    let out = decode_frames(&ReceiveInputs {
        cfg: &me,
        peer_cfg: &peer.cfg,
        rx: &rx,
        desired_frame_start: d_start,
        si_frame_start: Some(si_start),
        own_tx: OwnTx { frames: &own.frames },
        num_frames: 1,
        canceller: &FrequencyDomainCanceller,
        reference: None,
    })?;
    let (mut before, mut after) = (0.0, 0.0);
    for sym in out.iter().filter(|s| s.error.is_none()) {
        let y_si = demod_window(&me, si.window(sym.window_start, me.fft_size)?);
        let y_d = demod_window(&me, desired.window(sym.window_start, me.fft_size)?);
        for u in 0..me.used_subcarriers {
            before += y_si[u].norm_sqr();
            after += (sym.cleaned[u] - y_d[u]).norm_sqr();
        }
    }
    cancellation_depth_db(before, after)
}

fn cp_misalignment() -> Result<(bool, String)> {
    let within: Vec<(i64, f64)> = [0i64, 128, 384, 512]
        .into_iter()
        .map(|d| misalignment_depth_db(d).map(|v| (d, v)))
        .collect::<Result<_>>()?;
    let beyond = misalignment_depth_db(700)?;
    let ok = within.iter().all(|&(_, v)| v >= 100.0) && beyond < 30.0;
    let detail = within
        .iter()
        .map(|(d, v)| format!("d={d}: {:.1} dB", v.min(150.0)))
        .chain(std::iter::once(format!("d=700 (expected collapse): {beyond:.1} dB")))
        .collect::<Vec<_>>()
        .join(", ");
    Ok((ok, detail))
}

fn lpf_spec() -> Result<(bool, String)> {
    let spec = FirSpec::pss_lowpass(30.72e6);
    let f = design_lowpass(&spec)?;
    let (ripple, stop) = f.measure(spec.sample_rate_hz, 8192);
    let ok = ripple <= spec.passband_ripple_db && stop <= -spec.stopband_atten_db && f.stopband_edge_hz <= 1.4e6 + 0.5e6;
    Ok((
        ok,
        format!(
            "ripple {ripple:.3} dB up to {:.2} MHz, stopband {stop:.1} dB from {:.2} MHz",
            f.passband_edge_hz / 1e6,
            f.stopband_edge_hz / 1e6
        ),
    ))
}

/// Two small scenarios, run serially twice and in parallel once.
pub fn reproducibility_suite() -> Vec<Scenario> {
    let mut fd = Scenario::new("repro_fd", Profile::Fd20Mhz, QamOrder::Qpsk, QamOrder::Qam16);
    fd.seed = 5;
    fd.snr_db = 25.0;
    fd.si_channel = vec![
        TapSpec { delay: 0, gain_db: 0.0, phase_deg: 10.0 },
        TapSpec { delay: 2, gain_db: -20.0, phase_deg: 50.0 },
    ];
    let mut fdd = Scenario::new("repro_fdd", Profile::Fdd10Mhz, QamOrder::Qam16, QamOrder::Qam16);
    fdd.seed = 6;
    fdd.sync = "dual_pss".into();
    vec![fd, fdd]
}

fn reproducible() -> Result<(bool, String)> {
    let suite = reproducibility_suite();
    let serial = SuiteOptions::default();
    let parallel = SuiteOptions { parallel: true, ..Default::default() };
    let a = run_suite(&suite, &serial)?.csv();
    let b = run_suite(&suite, &serial)?.csv();
    let c = run_suite(&suite, &parallel)?.csv();
    Ok((a == b && a == c, format!("{} CSV bytes, serial/serial/parallel identical: {}", a.len(), a == b && a == c)))
}

/// Every check, in a fixed order.
pub fn run_all() -> Vec<Check> {
    vec![
        check("parseval", parseval()),
        check("ofdm_round_trip", ofdm_round_trip()),
        check("ls_exact_noise_free", ls_exact()),
        check("interpolator_affine", interpolator_affine()),
        check("subtraction_linearity", subtraction_linearity()),
        check("cp_bounded_misalignment", cp_misalignment()),
        check("lpf_response", lpf_spec()),
        check("suite_reproducible", reproducible()),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cheap_checks_pass() {
        for c in [
            check("parseval", parseval()),
            check("ls", ls_exact()),
            check("interp", interpolator_affine()),
            check("sub", subtraction_linearity()),
            check("lpf", lpf_spec()),
        ] {
            assert!(c.passed, "{}: {}", c.name, c.detail);
        }
    }

    #[test]
    fn failed_operation_is_a_failed_check() {
        let c = check("x", Err(crate::Error::Config("boom".into())));
        assert!(!c.passed);
        assert!(c.detail.contains("boom"));
    }
}
