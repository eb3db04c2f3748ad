use serde::{Deserialize, Serialize};

use crate::dsp::SampleStream;
use crate::{Error, Result, Sample};

/// The three knobs of the analog canceller.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ActiveTap {
    pub attenuation_db: f64,
    pub phase_shift_rad: f64,
    pub delay_samples: usize,
}

impl ActiveTap {
    pub fn from_gain(gain: Sample, delay_samples: usize) -> Self {
        Self {
            attenuation_db: -20.0 * gain.norm().log10(),
            phase_shift_rad: gain.arg(),
            delay_samples,
        }
    }

    pub fn gain(&self) -> Sample {
        Sample::from_polar(10f64.powf(-self.attenuation_db / 20.0), self.phase_shift_rad)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalogCancelConfig {
    pub passive_isolation_db: f64,
    /// Used as given when `auto_tune` is off.
    pub active_tap: ActiveTap,
    pub active_enabled: bool,
    /// Tune the tap on a probe of the running transmission instead.
    pub auto_tune: bool,
}

impl Default for AnalogCancelConfig {
    fn default() -> Self {
        Self {
            passive_isolation_db: 42.0,
            active_tap: ActiveTap::default(),
            active_enabled: true,
            auto_tune: true,
        }
    }
}

impl AnalogCancelConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.passive_isolation_db >= 0.0) {
            return Err(Error::Config(format!(
                "passive_isolation_db {} must be non-negative",
                self.passive_isolation_db
            )));
        }
        Ok(())
    }
}

pub fn apply_passive_isolation(isolation_db: f64, x: &SampleStream) -> SampleStream {
    x.scaled(Sample::new(10f64.powf(-isolation_db / 20.0), 0.0))
}

/// `si_at_rx - g * tx_ref[n - d]` over the index range of `si_at_rx`.
pub fn analog_cancel(
    cfg: &AnalogCancelConfig,
    si_at_rx: &SampleStream,
    tx_ref: &SampleStream,
) -> SampleStream {
    if !cfg.active_enabled {
        return si_at_rx.clone();
    }
    let g = cfg.active_tap.gain();
    let d = cfg.active_tap.delay_samples as i64;
    let start = si_at_rx.start_index;
    SampleStream::new(
        start,
        si_at_rx
            .samples
            .iter()
            .enumerate()
            .map(|(i, &y)| y - g * tx_ref.at(start + i as i64 - d))
            .collect(),
    )
}

/// Exhaustive integer delay search over `0..=max_delay`, each with the
/// closed-form LS gain; the delay with the smallest residual wins (earliest
/// on ties).
pub fn tune_active_tap(
    tx_ref: &SampleStream,
    si_at_rx: &SampleStream,
    max_delay: usize,
) -> Result<ActiveTap> {
    let ey: f64 = si_at_rx.samples.iter().map(|s| s.norm_sqr()).sum();
    let ex: f64 = tx_ref.samples.iter().map(|s| s.norm_sqr()).sum();
    if ey == 0.0 || ex == 0.0 {
        return Err(Error::Tuning("zero-energy probe".into()));
    }
    let start = si_at_rx.start_index;
    let mut best: Option<(f64, Sample, usize)> = None;
    for d in 0..=max_delay {
        let mut cross = Sample::new(0.0, 0.0);
        let mut exd = 0.0;
        for (i, y) in si_at_rx.samples.iter().enumerate() {
            let x = tx_ref.at(start + i as i64 - d as i64);
            cross += y * x.conj();
            exd += x.norm_sqr();
        }
        if exd == 0.0 {
            continue;
        }
        let residual = ey - cross.norm_sqr() / exd;
        if best.is_none_or(|(r, _, _)| residual < r) {
            best = Some((residual, cross / exd, d));
        }
    }
    let (_, g, d) = best.ok_or_else(|| Error::Tuning("probe windows do not overlap".into()))?;
    if g.norm() == 0.0 {
        return Err(Error::Tuning("probe is uncorrelated with the reference".into()));
    }
    Ok(ActiveTap::from_gain(g, d))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::mean_power;
    use crate::frontend::{add_noise, apply_channel, ChannelRealization, ChannelTap};
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

    fn db(x: f64) -> f64 {
        10.0 * x.log10()
    }

    #[test]
    fn disabled_is_identity() {
        let tx = noise_like(500, 1);
        let si = apply_passive_isolation(42.0, &tx);
        let cfg = AnalogCancelConfig {
            active_enabled: false,
            active_tap: ActiveTap { attenuation_db: 40.0, phase_shift_rad: 1.0, delay_samples: 2 },
            ..Default::default()
        };
        assert_eq!(analog_cancel(&cfg, &si, &tx), si);
    }

    #[test]
    fn passive_isolation_is_42_db() {
        let tx = noise_like(4000, 2);
        let si = apply_passive_isolation(42.0, &tx);
        let ratio = db(mean_power(&si.samples) / mean_power(&tx.samples));
        assert!((ratio + 42.0).abs() < 1e-9);
    }

    #[test]
    fn matched_tap_cancels_exactly() {
        let tx = noise_like(3000, 3);
        let g = Sample::from_polar(10f64.powf(-42.0 / 20.0), 0.7);
        let ch = ChannelRealization {
            taps: vec![ChannelTap { delay: 4, gain: g }],
            noise_power: 0.0,
        };
        let si = apply_channel(&ch, &tx, 0);
        let cfg = AnalogCancelConfig {
            active_tap: ActiveTap::from_gain(g, 4),
            ..Default::default()
        };
        let r = analog_cancel(&cfg, &si, &tx);
        assert!(r.samples.iter().all(|s| s.norm() < 1e-15));
    }

    #[test]
    fn tuner_recovers_single_tap() {
        let tx = noise_like(2560, 4);
        let g = Sample::from_polar(0.0079, -2.1);
        let ch = ChannelRealization {
            taps: vec![ChannelTap { delay: 7, gain: g }],
            noise_power: 0.0,
        };
        let si = apply_channel(&ch, &tx, 0);
        let tap = tune_active_tap(&tx, &si, 32).unwrap();
        assert_eq!(tap.delay_samples, 7);
        assert!((tap.gain() - g).norm() < 1e-12);
        let cfg = AnalogCancelConfig { active_tap: tap, ..Default::default() };
        let r = analog_cancel(&cfg, &si, &tx);
        assert!(db(mean_power(&r.samples) / mean_power(&tx.samples)) < -100.0);
    }

    #[test]
    fn tuner_with_noisy_probe() {
        let tx = noise_like(2560, 5);
        let ch = ChannelRealization {
            taps: vec![ChannelTap { delay: 3, gain: Sample::from_polar(0.01, 0.4) }],
            noise_power: 0.0,
        };
        let si = apply_channel(&ch, &tx, 0);
        let probe = add_noise(&si, mean_power(&si.samples) * 1e-4, 77);
        let tap = tune_active_tap(&tx, &probe, 16).unwrap();
        let cfg = AnalogCancelConfig { active_tap: tap, ..Default::default() };
        let r = analog_cancel(&cfg, &si, &tx);
        let supp = db(mean_power(&si.samples) / mean_power(&r.samples));
        assert!(supp >= 35.0, "suppression {supp}");
    }

    #[test]
    fn two_tap_channel_plateaus_at_grid_optimum() {
        let tx = noise_like(1024, 6);
        let ch = ChannelRealization {
            taps: vec![
                ChannelTap { delay: 1, gain: Sample::from_polar(0.01, 0.3) },
                ChannelTap { delay: 5, gain: Sample::from_polar(0.004, -1.2) },
            ],
            noise_power: 0.0,
        };
        let si = apply_channel(&ch, &tx, 0);
        let tap = tune_active_tap(&tx, &si, 8).unwrap();
        let residual = |t: ActiveTap| {
            let cfg = AnalogCancelConfig { active_tap: t, ..Default::default() };
            mean_power(&analog_cancel(&cfg, &si, &tx).samples)
        };
        let tuned = residual(tap);
        // brute force over delay, attenuation (0.05 dB) and phase (0.5 deg)
        let mut grid_best = f64::INFINITY;
        for d in 0..=8 {
            let step = if d == 1 { 1 } else { 4 };
            for ai in (0..200).step_by(step) {
                let att = 36.0 + ai as f64 * 0.05;
                for pi in (0..720).step_by(step) {
                    grid_best = grid_best.min(residual(ActiveTap {
                        attenuation_db: att,
                        phase_shift_rad: (pi as f64 * 0.5).to_radians() - std::f64::consts::PI,
                        delay_samples: d,
                    }));
                }
            }
        }
        assert_eq!(tap.delay_samples, 1);
        assert!(tuned <= grid_best * (1.0 + 1e-9));
        // the second path cannot be nulled by one tap
        let floor = 0.004f64.powi(2) * mean_power(&tx.samples);
        assert!(tuned > 0.9 * floor, "tuned {tuned} floor {floor}");
    }

    #[test]
    fn zero_probe_is_an_error() {
        let tx = noise_like(100, 7);
        let z = SampleStream::zeros(0, 100);
        assert!(matches!(tune_active_tap(&tx, &z, 4), Err(Error::Tuning(_))));
        assert!(matches!(tune_active_tap(&z, &tx, 4), Err(Error::Tuning(_))));
    }
}
