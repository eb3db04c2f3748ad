//! End-to-end acceptance criteria. Each criterion prints one PASS/FAIL line;
//! the process exits nonzero if any fails.

use std::f64::consts::TAU;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal as StdNormal};

use duplexsim::dsp::{db10, mean_power, SampleStream};
use duplexsim::frontend::{add_noise, ChannelRealization, ChannelTap};
use duplexsim::harness::{capture, node_tx, parse_suite, run_scenario, run_scenario_detailed, Scenario};
use duplexsim::metrics::DuplexMode;
use duplexsim::registry::{sync_strategies, SyncContext};
use duplexsim::selftest;
use duplexsim::waveform::{qam_demap, qam_map, FrameConfig, QamOrder};
use duplexsim::Sample;

const SUITE: &str = include_str!("../../../scenarios/link_suite.toml");

struct Outcome {
    passed: bool,
    detail: String,
}

fn shipped(id: &str) -> Scenario {
    parse_suite(SUITE, "link_suite.toml")
        .expect("shipped suite parses")
        .into_iter()
        .find(|s| s.id == id)
        .unwrap_or_else(|| panic!("shipped suite lacks {id}"))
}

fn analog_suppression() -> Outcome {
    let s = shipped("constellation_analog_digital");
    let r = run_scenario(&s).expect("scenario runs");
    let (passive, total) = (r.analog_passive_db.unwrap_or(f64::NAN), r.analog_total_db.unwrap_or(f64::NAN));
    let active = total - passive;
    // isolation applied to the transmit power, then spread over the SI taps
    let tap_power: f64 = s.si_channel.iter().map(|t| 10f64.powf(t.gain_db / 10.0)).sum();
    let expected_passive = s.analog.passive_isolation_db - db10(tap_power);
    let passed = (passive - 42.0).abs() <= 1.0
        && (passive - expected_passive).abs() <= 0.05
        && active >= 18.0
        && total >= 60.0;
    Outcome {
        passed,
        detail: format!(
            "passive {passive:.2} dB (oracle {expected_passive:.2}), active +{active:.2} dB, total {total:.2} dB"
        ),
    }
}

fn digital_depth() -> Outcome {
    let base = shipped("constellation_analog_digital");
    let own = node_tx(&base.node_cfg(0), base.seed, base.num_frames).expect("tx");
    let peer = node_tx(&base.node_cfg(1), base.seed, base.num_frames).expect("tx");
    let cap = capture(&base, &own, &peer).expect("capture");
    let passive = cap.si_passive.as_ref().expect("full duplex");
    let resid = cap.si_residual.as_ref().expect("full duplex").extract(passive.start_index, passive.len());
    let tx_power = mean_power(&cap.own_pa.as_ref().expect("full duplex").samples);
    let p_si = mean_power(&resid.samples);
    let p_desired = cap.noise_power * 10f64.powf(base.snr_db / 10.0);

    // receiver noise 50 dB under the residual SI inside the occupied band
    let cfg = base.node_cfg(0);
    let in_band = cfg.used_subcarriers as f64 / cfg.fft_size as f64;
    let noise = p_si * 1e-5 / in_band;
    let snr_db = db10(p_desired / noise);

    let depths: Vec<f64> = (0..20u64)
        .into_par_iter()
        .map(|k| {
            let mut s = base.clone();
            s.seed = 100 + k;
            s.snr_db = snr_db;
            run_scenario(&s).expect("scenario runs").digital_db.unwrap_or(f64::NAN)
        })
        .collect();
    let lo = depths.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = depths.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mean = depths.iter().sum::<f64>() / depths.len() as f64;
    Outcome {
        passed: depths.iter().all(|d| (43.0..=48.0).contains(d)),
        detail: format!(
            "residual SI {:.1} dB under Tx, in-band noise 50 dB under it; depth over 20 seeds min {lo:.2} mean {mean:.2} max {hi:.2} dB",
            db10(tx_power / p_si)
        ),
    }
}

fn constellation() -> Outcome {
    let mut off = shipped("constellation_analog_only");
    let mut on = shipped("constellation_analog_digital");
    off.num_frames = 10;
    on.num_frames = 10;
    let (r_off, r_on) = rayon::join(|| run_scenario_detailed(&off), || run_scenario_detailed(&on));
    let (r_off, r_on) = (r_off.expect("scenario runs"), r_on.expect("scenario runs"));
    let sinr = r_on.post_cancel_sinr_db.unwrap_or(f64::NAN);
    let passed = r_off.report.evm_percent > 15.0
        && r_on.report.evm_percent < 4.0
        && r_on.report.ber < 1e-3
        && r_on.report.qam_order == QamOrder::Qam64
        && r_on.report.errors.is_empty();
    Outcome {
        passed,
        detail: format!(
            "off: EVM {:.1} %; on: EVM {:.3} %, BER {:.2e}, post-cancel SINR {sinr:.1} dB over {} frames",
            r_off.report.evm_percent, r_on.report.evm_percent, r_on.report.ber, on.num_frames
        ),
    }
}

/// Data cells per frame from the frame layout, counted by hand: PSS symbols
/// reserve 2*106 subcarriers, RS symbols carry one comb per node and, in
/// full duplex, mute the peer's comb.
fn cell_oracle(used: usize, full_duplex: bool) -> usize {
    let total = 120 * used;
    let pss = 2 * 2 * 106;
    let rs_symbols = 20 * 2;
    let combs = if full_duplex { 2 } else { 1 };
    total - pss - rs_symbols * combs * used / 6
}

fn throughput_ratio() -> Outcome {
    let oracle = cell_oracle(1200, true) as f64 / cell_oracle(600, false) as f64;
    let mut lines = Vec::new();
    let mut passed = true;
    for (q, lo) in [(4u32, 1.85), (16, 1.85), (64, 1.84)] {
        let fd = run_scenario(&shipped(&format!("throughput_fd_qam{q}"))).expect("scenario runs");
        let fdd = run_scenario(&shipped(&format!("throughput_fdd_qam{q}"))).expect("scenario runs");
        let bits = QamOrder::try_from(q).expect("order").bits_per_symbol() as f64;
        let fd_expected = 2.0 * cell_oracle(1200, true) as f64 * bits / 10e-3;
        let ratio = fd.throughput_bps / fdd.throughput_bps;
        let ok = fd.duplex_mode == DuplexMode::Full
            && fdd.duplex_mode == DuplexMode::FddBaseline
            && fd.ber == 0.0
            && fdd.ber == 0.0
            && (fd.throughput_bps - fd_expected).abs() < 1e-6 * fd_expected
            && (lo..=2.0).contains(&ratio)
            && (ratio - oracle).abs() <= 0.01;
        passed &= ok;
        lines.push(format!("{q}-QAM {ratio:.4}"));
    }
    Outcome { passed, detail: format!("{} (cell-count oracle {oracle:.4})", lines.join(", ")) }
}

fn sync_robustness() -> Outcome {
    const TRIALS: u64 = 200;
    let me = FrameConfig::fd_20mhz(QamOrder::Qpsk, 0);
    let peer_cfg = me.with_node(1);
    let max_offset = (5e-3 * me.sample_rate_hz) as i64;
    let strategies = sync_strategies();
    let si_suppressed = strategies.get("si_suppressed").expect("registered");
    let results: Vec<bool> = (0..TRIALS)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(0xACC5 + t);
            let d_off = rng.random_range(0..max_offset);
            let si_off = rng.random_range(0..max_offset);
            let own = node_tx(&me, 1000 + t, 1).expect("tx").baseband;
            let own = SampleStream::new(si_off, own.samples);
            let peer = node_tx(&peer_cfg, 2000 + t, 1).expect("tx").baseband;
            let si_ch = ChannelRealization {
                taps: vec![
                    ChannelTap { delay: 0, gain: Sample::from_polar(1.0, rng.random_range(0.0..TAU)) },
                    ChannelTap { delay: rng.random_range(1..12), gain: Sample::from_polar(0.1, rng.random_range(0.0..TAU)) },
                ],
                noise_power: 0.0,
            };
            let si = si_ch.convolve(&own);
            // desired 40 dB under the SI, SNR 0 dB
            let gain = Sample::from_polar(10f64.powf(-40.0 / 20.0), rng.random_range(0.0..TAU));
            let desired = SampleStream::new(d_off, peer.scaled(gain).samples);
            let len = (max_offset as usize) + me.frame_len_samples() + 4096;
            let rx = si.add(&desired).extract(0, len);
            let rx = add_noise(&rx, mean_power(&desired.samples), 3000 + t);
            let ctx = SyncContext { cfg: &me, rx: &rx, own_tx: Some(&own) };
            si_suppressed
                .acquire(&ctx)
                .map(|a| a.desired_frame_start == Some(d_off) && a.si_frame_start == Some(si_off))
                .unwrap_or(false)
        })
        .collect();
    let ok = results.iter().filter(|&&r| r).count();
    let rate = ok as f64 / TRIALS as f64;
    Outcome {
        passed: rate >= 0.99,
        detail: format!(
            "{ok}/{TRIALS} trials recovered both indices exactly ({:.1} %), SI 40 dB over desired, SNR 0 dB",
            100.0 * rate
        ),
    }
}

fn property_suites() -> Outcome {
    let checks = selftest::run_all();
    let failed: Vec<&str> = checks.iter().filter(|c| !c.passed).map(|c| c.name).collect();
    for c in &checks {
        println!("    {} {:<26} {}", if c.passed { "ok  " } else { "FAIL" }, c.name, c.detail);
    }
    Outcome {
        passed: failed.is_empty(),
        detail: if failed.is_empty() {
            format!("{} checks passed", checks.len())
        } else {
            format!("failed: {}", failed.join(", "))
        },
    }
}

fn ber_sanity() -> Outcome {
    const BITS: usize = 1_000_000;
    let std = StdNormal::standard();
    // Q(x) = p  =>  x = Phi^-1(1 - p); QPSK: BER = Q(sqrt(2 Eb/N0))
    let ebn0_for = |p: f64| std.inverse_cdf(1.0 - p).powi(2) / 2.0;
    let mut passed = true;
    let mut lines = Vec::new();
    for (i, target) in [1e-3, 1e-4].into_iter().enumerate() {
        let ebn0 = ebn0_for(target);
        let mut rng = ChaCha8Rng::seed_from_u64(77 + i as u64);
        let bits: Vec<u8> = (0..BITS).map(|_| rng.random_range(0..2u8)).collect();
        let tx = qam_map(&bits, QamOrder::Qpsk).expect("map");
        let es = tx.iter().map(|z| z.norm_sqr()).sum::<f64>() / tx.len() as f64;
        let n0 = es / 2.0 / ebn0;
        let noise = Normal::new(0.0, (n0 / 2.0).sqrt()).expect("sigma");
        let rx: Vec<Sample> = tx.iter().map(|z| z + Sample::new(noise.sample(&mut rng), noise.sample(&mut rng))).collect();
        let errors = qam_demap(&rx, QamOrder::Qpsk).iter().zip(&bits).filter(|(a, b)| a != b).count();
        let ber = errors as f64 / BITS as f64;
        let gap = if errors == 0 { f64::INFINITY } else { (db10(ebn0_for(ber)) - db10(ebn0)).abs() };
        passed &= gap <= 0.5;
        lines.push(format!("target {target:.0e} at {:.2} dB: BER {ber:.3e}, gap {gap:.3} dB", db10(ebn0)));
    }
    Outcome { passed, detail: lines.join("; ") }
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 7] = [
        ("1 analog cancellation", analog_suppression),
        ("2 digital cancellation depth", digital_depth),
        ("3 constellation with and without digital cancellation", constellation),
        ("4 full-duplex vs FDD throughput ratio", throughput_ratio),
        ("5 synchronization robustness", sync_robustness),
        ("6 property suites", property_suites),
        ("7 uncoded 4-QAM BER vs theory", ber_sanity),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let t = Instant::now();
        let o = f();
        if !o.passed {
            failed += 1;
        }
        println!(
            "{} criterion {name}: {} [{:.1} s]",
            if o.passed { "PASS" } else { "FAIL" },
            o.detail,
            t.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} of 7 criteria passed", 7 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
