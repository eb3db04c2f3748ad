//! Power ratios, EVM, BER, goodput and the per-run CSV report.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::waveform::{qam_points, QamOrder};
use crate::{Error, Result, Sample};

/// Finite stand-in for an infinite depth (perfect cancellation) in reports.
pub const DEPTH_CAP_DB: f64 = 150.0;

/// `10 log10(before / after)`; `+inf` when `after` is zero.
pub fn cancellation_depth_db(power_before: f64, power_after: f64) -> Result<f64> {
    if !(power_before > 0.0) || !power_before.is_finite() {
        return Err(Error::Measurement(format!("reference power {power_before} must be positive")));
    }
    if power_after < 0.0 || power_after.is_nan() {
        return Err(Error::Measurement(format!("residual power {power_after} is not a power")));
    }
    if power_after == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (power_before / power_after).log10())
}

/// Clamp a depth into `[-DEPTH_CAP_DB, DEPTH_CAP_DB]` for reporting.
pub fn capped(db: f64) -> f64 {
    db.clamp(-DEPTH_CAP_DB, DEPTH_CAP_DB)
}

/// Data-aided EVM in percent: `sqrt(mean|z - r|^2 / mean|r|^2) * 100`.
pub fn evm_percent(z: &[Sample], reference: &[Sample]) -> Result<f64> {
    if z.is_empty() || z.len() != reference.len() {
        return Err(Error::Measurement(format!(
            "EVM needs equal, non-empty inputs (got {} and {})",
            z.len(),
            reference.len()
        )));
    }
    let err: f64 = z.iter().zip(reference).map(|(z, r)| (z - r).norm_sqr()).sum();
    let pow: f64 = reference.iter().map(|r| r.norm_sqr()).sum();
    if pow == 0.0 {
        return Err(Error::Measurement("EVM reference has zero power".into()));
    }
    Ok((err / pow).sqrt() * 100.0)
}

/// Blind EVM against the nearest point of the unit-power constellation.
pub fn evm_percent_blind(z: &[Sample], order: QamOrder) -> Result<f64> {
    let pts = qam_points(order);
    let nearest: Vec<Sample> = z
        .iter()
        .map(|z| {
            *pts.iter()
                .min_by(|a, b| (z - *a).norm_sqr().total_cmp(&(z - *b).norm_sqr()))
                .expect("non-empty constellation")
        })
        .collect();
    evm_percent(z, &nearest)
}

/// Bit and symbol error tallies. Merging is a plain sum, so any
/// partitioning and order of partial tallies gives the same total.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ErrorCount {
    pub bits: u64,
    pub bit_errors: u64,
    /// Bits carried by QAM symbols that were decoded without error.
    pub correct_symbol_bits: u64,
}

impl ErrorCount {
    /// Compare `rx` to `tx` in groups of `bits_per_symbol`.
    pub fn tally(tx: &[u8], rx: &[u8], bits_per_symbol: usize) -> Self {
        assert!(bits_per_symbol > 0);
        let overlap = tx.len().min(rx.len());
        // bits the receiver never produced count as errors
        let mut c = ErrorCount {
            bits: tx.len() as u64,
            bit_errors: (tx.len() - overlap) as u64,
            correct_symbol_bits: 0,
        };
        for (t, r) in tx[..overlap].chunks(bits_per_symbol).zip(rx[..overlap].chunks(bits_per_symbol)) {
            let errs = t.iter().zip(r).filter(|(a, b)| a != b).count() as u64;
            c.bit_errors += errs;
            if errs == 0 && t.len() == bits_per_symbol {
                c.correct_symbol_bits += t.len() as u64;
            }
        }
        c
    }

    /// All of `bits` lost (failed symbol or frame).
    pub fn lost(bits: u64) -> Self {
        ErrorCount { bits, bit_errors: bits, correct_symbol_bits: 0 }
    }

    pub fn merge(self, other: Self) -> Self {
        ErrorCount {
            bits: self.bits + other.bits,
            bit_errors: self.bit_errors + other.bit_errors,
            correct_symbol_bits: self.correct_symbol_bits + other.correct_symbol_bits,
        }
    }

    /// Hard-decision BER, capped at 0.5. Zero when no bits were sent.
    pub fn ber(&self) -> f64 {
        if self.bits == 0 {
            0.0
        } else {
            (self.bit_errors as f64 / self.bits as f64).min(0.5)
        }
    }
}

/// Correctly decoded payload bits over simulated airtime.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Goodput {
    pub correct_bits: u64,
    pub elapsed_s: f64,
}

impl Goodput {
    /// Directions that run concurrently over the same airtime.
    pub fn concurrent(self, other: Self) -> Self {
        Goodput {
            correct_bits: self.correct_bits + other.correct_bits,
            elapsed_s: self.elapsed_s.max(other.elapsed_s),
        }
    }

    pub fn throughput_bps(&self) -> f64 {
        if self.elapsed_s <= 0.0 {
            0.0
        } else {
            self.correct_bits as f64 / self.elapsed_s
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DuplexMode {
    Full,
    FddBaseline,
}

impl DuplexMode {
    pub fn name(self) -> &'static str {
        match self {
            DuplexMode::Full => "full",
            DuplexMode::FddBaseline => "fdd_baseline",
        }
    }
}

pub const CSV_HEADER: &str = "scenario_id,seed,duplex_mode,qam_order,snr_db,analog_passive_db,analog_total_db,digital_db,total_cancellation_db,evm_percent,ber,throughput_bps";

/// Metrics of one run. Cancellation fields are `None` when there is no
/// self-interference to measure (FDD baseline).
#[derive(Debug, Clone, PartialEq)]
pub struct LinkReport {
    pub scenario_id: String,
    pub seed: u64,
    pub duplex_mode: DuplexMode,
    /// Order of the observed (desired) link.
    pub qam_order: QamOrder,
    pub snr_db: f64,
    pub analog_passive_db: Option<f64>,
    pub analog_total_db: Option<f64>,
    pub digital_db: Option<f64>,
    pub total_cancellation_db: Option<f64>,
    pub evm_percent: f64,
    pub ber: f64,
    pub throughput_bps: f64,
    /// Sync indices found by the observed receiver.
    pub desired_start_index: Option<i64>,
    pub si_start_index: Option<i64>,
    /// Best digital depth a linear canceller can reach against the PA's
    /// distortion; set only when a PA nonlinearity is modeled.
    pub imd_limited_db: Option<f64>,
    /// Processing failures (sync, decode); the run still produces a row.
    pub errors: Vec<String>,
}

impl LinkReport {
    pub fn key(&self) -> (String, u64, DuplexMode) {
        (self.scenario_id.clone(), self.seed, self.duplex_mode)
    }

    pub fn to_csv_row(&self) -> String {
        let db = |v: Option<f64>| v.map(|v| format!("{:.1}", tenth(capped(v)))).unwrap_or_default();
        let mut s = String::new();
        write!(
            s,
            "{},{},{},{},{:.1},{},{},{},{},{:.3},{:.6e},{:.1}",
            self.scenario_id,
            self.seed,
            self.duplex_mode.name(),
            self.qam_order.order(),
            self.snr_db,
            db(self.analog_passive_db),
            db(self.analog_total_db),
            db(self.digital_db),
            db(self.total_cancellation_db),
            self.evm_percent,
            self.ber,
            self.throughput_bps
        )
        .expect("writing to a String");
        s
    }
}

/// Round to 0.1 without producing a negative zero.
fn tenth(v: f64) -> f64 {
    (v * 10.0).round() / 10.0 + 0.0
}

/// Combine per-shard report lists into one list ordered by
/// (scenario_id, seed, duplex_mode), independent of shard order.
pub fn merge_reports<I: IntoIterator<Item = Vec<LinkReport>>>(shards: I) -> Vec<LinkReport> {
    let mut all: BTreeMap<(String, u64, DuplexMode), LinkReport> = BTreeMap::new();
    for shard in shards {
        for r in shard {
            all.insert(r.key(), r);
        }
    }
    all.into_values().collect()
}

pub fn to_csv(reports: &[LinkReport]) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for r in reports {
        s.push_str(&r.to_csv_row());
        s.push('\n');
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    #[test]
    fn depth_examples() {
        assert_eq!(cancellation_depth_db(1.0, 1.0).unwrap(), 0.0);
        assert!((cancellation_depth_db(1.0, 1e-6).unwrap() - 60.0).abs() < 1e-12);
        assert_eq!(cancellation_depth_db(1.0, 0.0).unwrap(), f64::INFINITY);
        assert_eq!(capped(f64::INFINITY), DEPTH_CAP_DB);
        assert!(matches!(cancellation_depth_db(0.0, 1.0), Err(Error::Measurement(_))));
    }

    #[test]
    fn evm_examples() {
        let pts = qam_points(QamOrder::Qpsk);
        assert_eq!(evm_percent(&pts, &pts).unwrap(), 0.0);
        let z: Vec<Sample> = pts.iter().map(|p| p + 0.1).collect();
        assert!((evm_percent(&z, &pts).unwrap() - 10.0).abs() < 1e-9);
        assert!((evm_percent_blind(&z, QamOrder::Qpsk).unwrap() - 10.0).abs() < 1e-9);
        assert!(evm_percent(&[], &[]).is_err());
    }

    #[test]
    fn evm_at_20db_snr_is_ten_percent() {
        // EVM = 10^(-SNR/20)
        let pts = qam_points(QamOrder::Qam16);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = Normal::new(0.0, (0.01f64 / 2.0).sqrt()).unwrap();
        let r: Vec<Sample> = (0..100_000).map(|i| pts[i % 16]).collect();
        let z: Vec<Sample> = r.iter().map(|r| r + Sample::new(n.sample(&mut rng), n.sample(&mut rng))).collect();
        let evm = evm_percent(&z, &r).unwrap();
        assert!((evm - 10.0).abs() < 0.5, "{evm}");
    }

    #[test]
    fn tally_counts_symbols() {
        let tx = [0, 1, 1, 0, 1, 1];
        let rx = [0, 1, 1, 1, 1, 1];
        let c = ErrorCount::tally(&tx, &rx, 2);
        assert_eq!(c, ErrorCount { bits: 6, bit_errors: 1, correct_symbol_bits: 4 });
        let short = ErrorCount::tally(&tx, &rx[..2], 2);
        assert_eq!(short, ErrorCount { bits: 6, bit_errors: 4, correct_symbol_bits: 2 });
        assert_eq!(ErrorCount::lost(10).ber(), 0.5);
    }

    #[test]
    fn all_failed_is_zero_throughput() {
        let g = Goodput { correct_bits: 0, elapsed_s: 0.01 };
        assert_eq!(g.throughput_bps(), 0.0);
    }

    #[test]
    fn csv_row_format() {
        let r = LinkReport {
            scenario_id: "s".into(),
            seed: 3,
            duplex_mode: DuplexMode::Full,
            qam_order: QamOrder::Qam64,
            snr_db: 30.0,
            analog_passive_db: Some(42.04),
            analog_total_db: Some(60.26),
            digital_db: Some(f64::INFINITY),
            total_cancellation_db: Some(f64::INFINITY),
            evm_percent: 1.5,
            ber: 0.0,
            throughput_bps: 1.0e7,
            desired_start_index: None,
            si_start_index: None,
            imd_limited_db: None,
            errors: vec![],
        };
        assert_eq!(r.to_csv_row(), "s,3,full,64,30.0,42.0,60.3,150.0,150.0,1.500,0.000000e0,10000000.0");
        assert_eq!(to_csv(&[]), format!("{CSV_HEADER}\n"));
        assert_eq!(CSV_HEADER.split(',').count(), 12);
    }

    proptest! {
        #[test]
        fn depth_is_antisymmetric(a in 1e-12f64..1e12, b in 1e-12f64..1e12) {
            let ab = cancellation_depth_db(a, b).unwrap();
            let ba = cancellation_depth_db(b, a).unwrap();
            prop_assert!((ab + ba).abs() < 1e-9);
        }

        #[test]
        fn evm_is_scale_invariant(
            v in prop::collection::vec((-2f64..2.0, -2f64..2.0, -0.3f64..0.3, -0.3f64..0.3), 1..50),
            scale in 1e-3f64..1e3,
        ) {
            let r: Vec<Sample> = v.iter().map(|t| Sample::new(t.0 + 3.0, t.1)).collect();
            let z: Vec<Sample> = v.iter().zip(&r).map(|(t, r)| r + Sample::new(t.2, t.3)).collect();
            let zs: Vec<Sample> = z.iter().map(|z| z * scale).collect();
            let rs: Vec<Sample> = r.iter().map(|r| r * scale).collect();
            let a = evm_percent(&z, &r).unwrap();
            let b = evm_percent(&zs, &rs).unwrap();
            prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a));
        }

        #[test]
        fn tallies_merge_in_any_order(parts in prop::collection::vec((0u64..1000, 0u64..1000, 0u64..1000), 0..20)) {
            let counts: Vec<ErrorCount> = parts.iter().map(|p| ErrorCount { bits: p.0, bit_errors: p.1, correct_symbol_bits: p.2 }).collect();
            let fwd = counts.iter().fold(ErrorCount::default(), |a, c| a.merge(*c));
            let rev = counts.iter().rev().fold(ErrorCount::default(), |a, c| a.merge(*c));
            prop_assert_eq!(fwd, rev);
        }

        #[test]
        fn silenced_direction_adds_nothing(bits in 0u64..10_000_000, t in 1e-3f64..1.0) {
            let one = Goodput { correct_bits: bits, elapsed_s: t };
            let silent = Goodput { correct_bits: 0, elapsed_s: t };
            prop_assert_eq!(one.concurrent(silent).throughput_bps(), one.throughput_bps());
        }
    }
}
