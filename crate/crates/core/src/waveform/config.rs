use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Frame numerology profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Profile {
    /// 20 MHz in-band full duplex: 2048 FFT, 512 CP, 30.72 MS/s.
    #[serde(rename = "fd_20mhz")]
    Fd20Mhz,
    /// 10 MHz half-duplex FDD baseline: 1024 FFT, 256 CP, 15.36 MS/s.
    #[serde(rename = "fdd_10mhz")]
    Fdd10Mhz,
}

impl Profile {
    pub fn name(self) -> &'static str {
        match self {
            Profile::Fd20Mhz => "fd_20mhz",
            Profile::Fdd10Mhz => "fdd_10mhz",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub enum QamOrder {
    Qpsk,
    Qam16,
    Qam64,
}

impl QamOrder {
    pub fn bits_per_symbol(self) -> usize {
        match self {
            QamOrder::Qpsk => 2,
            QamOrder::Qam16 => 4,
            QamOrder::Qam64 => 6,
        }
    }

    pub fn order(self) -> u32 {
        1 << self.bits_per_symbol()
    }
}

impl TryFrom<u32> for QamOrder {
    type Error = Error;

    fn try_from(order: u32) -> Result<Self> {
        match order {
            4 => Ok(QamOrder::Qpsk),
            16 => Ok(QamOrder::Qam16),
            64 => Ok(QamOrder::Qam64),
            other => Err(Error::Config(format!(
                "unsupported QAM order {other} (expected 4, 16 or 64)"
            ))),
        }
    }
}

impl From<QamOrder> for u32 {
    fn from(q: QamOrder) -> u32 {
        q.order()
    }
}

/// Numerology shared by transmitter and receiver of one link direction.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameConfig {
    pub profile: Profile,
    pub fft_size: usize,
    pub cp_len: usize,
    pub sample_rate_hz: f64,
    pub subcarrier_spacing_hz: f64,
    pub slots_per_frame: usize,
    pub symbols_per_slot: usize,
    pub used_subcarriers: usize,
    pub qam_order: QamOrder,
    pub node_id: u8,
    /// In PSS symbols every subcarrier with `|k| <= pss_guard` carries PSS or
    /// nothing, so the sync low-pass sees no data energy.
    pub pss_guard: usize,
}

/// Subcarrier span kept clear around the PSS: covers the stopband edge of
/// the 1.4 MHz sync filter (about 1.58 MHz, i.e. 105 subcarriers).
pub const PSS_GUARD_SUBCARRIERS: usize = 106;

/// PSS root per node.
pub const PSS_ROOTS: [u32; 2] = [25, 29];

/// Per-slot OFDM symbols carrying reference symbols.
pub const RS_SYMBOLS_PER_SLOT: [usize; 2] = [0, 3];
pub const RS_STRIDE: usize = 6;

impl FrameConfig {
    pub fn new(profile: Profile, qam_order: QamOrder, node_id: u8) -> Self {
        let (fft_size, cp_len, sample_rate_hz, used) = match profile {
            Profile::Fd20Mhz => (2048, 512, 30.72e6, 1200),
            Profile::Fdd10Mhz => (1024, 256, 15.36e6, 600),
        };
        Self {
            profile,
            fft_size,
            cp_len,
            sample_rate_hz,
            subcarrier_spacing_hz: 15e3,
            slots_per_frame: 20,
            symbols_per_slot: 6,
            used_subcarriers: used,
            qam_order,
            node_id,
            pss_guard: PSS_GUARD_SUBCARRIERS,
        }
    }

    pub fn fd_20mhz(qam_order: QamOrder, node_id: u8) -> Self {
        Self::new(Profile::Fd20Mhz, qam_order, node_id)
    }

    pub fn fdd_10mhz(qam_order: QamOrder, node_id: u8) -> Self {
        Self::new(Profile::Fdd10Mhz, qam_order, node_id)
    }

    pub fn with_node(&self, node_id: u8) -> Self {
        Self {
            node_id,
            ..self.clone()
        }
    }

    pub fn with_qam(&self, qam_order: QamOrder) -> Self {
        Self {
            qam_order,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !crate::dsp::is_power_of_two(self.fft_size) {
            return Err(Error::Config(format!(
                "fft_size {} is not a power of two",
                self.fft_size
            )));
        }
        if !self.used_subcarriers.is_multiple_of(2) || self.used_subcarriers > self.fft_size - 1 {
            return Err(Error::Config(format!(
                "used_subcarriers {} must be even and at most fft_size - 1",
                self.used_subcarriers
            )));
        }
        if self.node_id > 1 {
            return Err(Error::Config(format!("node_id {} not in {{0, 1}}", self.node_id)));
        }
        if self.cp_len >= self.fft_size {
            return Err(Error::Config("cp_len must be shorter than fft_size".into()));
        }
        // 10 ms frames: compare in integer samples to avoid rounding
        let frame_samples = self.frame_len_samples() as f64;
        if (frame_samples / self.sample_rate_hz - 0.010).abs() > 1e-12 {
            return Err(Error::Config(format!(
                "frame lasts {} s, expected 10 ms",
                frame_samples / self.sample_rate_hz
            )));
        }
        if self.pss_guard < 31 || self.pss_guard > self.used_subcarriers / 2 {
            return Err(Error::Config("pss_guard must cover the 62 PSS subcarriers".into()));
        }
        Ok(())
    }

    pub fn symbols_per_frame(&self) -> usize {
        self.slots_per_frame * self.symbols_per_slot
    }

    pub fn symbol_len(&self) -> usize {
        self.fft_size + self.cp_len
    }

    pub fn frame_len_samples(&self) -> usize {
        self.symbols_per_frame() * self.symbol_len()
    }

    pub fn half_frame_len_samples(&self) -> usize {
        self.frame_len_samples() / 2
    }

    pub fn frame_duration_s(&self) -> f64 {
        self.frame_len_samples() as f64 / self.sample_rate_hz
    }

    pub fn peer_id(&self) -> u8 {
        1 - self.node_id
    }

    /// Peer reference-symbol cells are left empty only when both nodes share
    /// the band.
    pub fn mutes_peer_rs(&self) -> bool {
        self.profile == Profile::Fd20Mhz
    }

    /// Signed subcarrier index of used slot `u` (lowest frequency first, DC skipped).
    pub fn subcarrier_of(&self, u: usize) -> i32 {
        let half = (self.used_subcarriers / 2) as i32;
        let u = u as i32;
        if u < half {
            u - half
        } else {
            u - half + 1
        }
    }

    /// Used slot of a signed subcarrier index, if it is in use.
    pub fn used_index_of(&self, k: i32) -> Option<usize> {
        let half = (self.used_subcarriers / 2) as i32;
        if k == 0 || k < -half || k > half {
            None
        } else if k < 0 {
            Some((k + half) as usize)
        } else {
            Some((k + half - 1) as usize)
        }
    }

    pub fn bin_of(&self, k: i32) -> usize {
        k.rem_euclid(self.fft_size as i32) as usize
    }

    /// Frame symbol indices of the two PSS symbols (last symbol of slots 0 and 10).
    pub fn pss_symbols(&self) -> [usize; 2] {
        let last = self.symbols_per_slot - 1;
        [last, (self.slots_per_frame / 2) * self.symbols_per_slot + last]
    }

    pub fn is_pss_symbol(&self, sym: usize) -> bool {
        self.pss_symbols().contains(&(sym % self.symbols_per_frame()))
    }

    pub fn is_rs_symbol(&self, sym: usize) -> bool {
        RS_SYMBOLS_PER_SLOT.contains(&(sym % self.symbols_per_slot))
    }

    pub fn rs_offset(node_id: u8) -> usize {
        3 * node_id as usize
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_profiles_have_10ms_frames() {
        for p in [Profile::Fd20Mhz, Profile::Fdd10Mhz] {
            let cfg = FrameConfig::new(p, QamOrder::Qpsk, 0);
            cfg.validate().unwrap();
            assert_eq!(cfg.symbols_per_frame(), 120);
            assert!((cfg.frame_duration_s() - 0.010).abs() < 1e-15);
            assert!((cfg.sample_rate_hz / cfg.fft_size as f64 - 15e3).abs() < 1e-9);
        }
        assert_eq!(FrameConfig::fd_20mhz(QamOrder::Qpsk, 0).frame_len_samples(), 307_200);
    }

    #[test]
    fn subcarrier_index_round_trip() {
        let cfg = FrameConfig::fd_20mhz(QamOrder::Qpsk, 0);
        assert_eq!(cfg.subcarrier_of(0), -600);
        assert_eq!(cfg.subcarrier_of(599), -1);
        assert_eq!(cfg.subcarrier_of(600), 1);
        assert_eq!(cfg.subcarrier_of(1199), 600);
        for u in 0..cfg.used_subcarriers {
            assert_eq!(cfg.used_index_of(cfg.subcarrier_of(u)), Some(u));
        }
        assert_eq!(cfg.used_index_of(0), None);
        assert_eq!(cfg.bin_of(-1), 2047);
    }

    #[test]
    fn rejects_bad_qam_and_node() {
        assert!(QamOrder::try_from(8).is_err());
        let mut cfg = FrameConfig::fd_20mhz(QamOrder::Qam64, 0);
        cfg.node_id = 2;
        assert!(cfg.validate().is_err());
        let mut cfg = FrameConfig::fd_20mhz(QamOrder::Qam64, 0);
        cfg.used_subcarriers = 2048;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn pss_and_rs_symbol_positions() {
        let cfg = FrameConfig::fd_20mhz(QamOrder::Qpsk, 0);
        assert_eq!(cfg.pss_symbols(), [5, 65]);
        assert!(cfg.is_rs_symbol(0) && cfg.is_rs_symbol(3) && cfg.is_rs_symbol(63));
        assert!(!cfg.is_rs_symbol(5));
        // half-frame spacing is 5 ms
        let spacing = (cfg.pss_symbols()[1] - cfg.pss_symbols()[0]) * cfg.symbol_len();
        assert!((spacing as f64 / cfg.sample_rate_hz - 0.005).abs() < 1e-15);
    }
}
