//! Baseband simulator of an in-band full-duplex OFDM link.
//!
//! Two nodes exchange LTE-downlink-style frames on the same carrier. Each
//! node's receiver sees its own transmission leaking back through a passive
//! isolation path, suppresses it with a single active analog tap, and then
//! removes the residual in the frequency domain after FFT, using
//! ZC-PSS timing and LS channel estimates on orthogonal reference-symbol
//! patterns.
//!
//! Module map:
//!
//! - [`dsp`]: DFT, FIR design/application, sliding correlation, power arithmetic
//! - [`waveform`]: frame numerology, QAM, PSS, RS placement, OFDM (de)modulation
//! - [`frontend`]: hardware impairments, multipath, passive/active analog cancellation
//! - [`sync_est`]: dual PSS synchronization and dual LS channel estimation
//! - [`cancel_decode`]: frequency-domain SI rebuild/subtract, ZF, decoding
//! - [`metrics`]: cancellation depth, EVM, BER, throughput, CSV rows
//! - [`harness`]: scenario config, end-to-end runs and suites
//! - [`registry`]: named, runtime-selectable strategies (sync, digital canceller)

pub mod cancel_decode;
pub mod dsp;
pub mod error;
pub mod frontend;
pub mod harness;
pub mod metrics;
pub mod registry;
pub mod selftest;
pub mod sync_est;
pub mod waveform;

pub use error::{Error, Result};

/// Complex baseband sample.
pub type Sample = num_complex::Complex64;
