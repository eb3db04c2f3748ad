//! LTE-downlink-style frame: numerology, QAM, PSS, reference symbols, OFDM.

mod config;
mod golden;
mod grid;
mod ofdm;
mod pss;
mod qam;

pub use config::{FrameConfig, Profile, QamOrder};
pub use golden::{read_iq, write_golden, GoldenHeader};
pub use grid::{build_frame, data_capacity, layout_kind, pilot_frame, CellKind, ResourceGrid, RsPattern};
pub use ofdm::{demod_window, ofdm_demodulate, ofdm_modulate, phase_ramp, symbol_to_time};
pub use pss::{generate_pss, pss_root, PssSequence};
pub use qam::{qam_demap, qam_map, qam_points};
