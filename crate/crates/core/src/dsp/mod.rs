//! Numeric primitives shared by every stage of the link.
//!
//! DFT convention used throughout the crate: unnormalized forward transform,
//! `1/N` on the inverse.

mod fft;
mod fir;
mod power;
mod stream;
mod xcorr;

pub use fft::{dft, dft_in_place, idft, idft_in_place, is_power_of_two};
pub use fir::{design_lowpass, fir_apply, FirFilter, FirSpec, FirStage};
pub use power::{db10, energy, from_db10, mean_power, psd_welch};
pub use stream::SampleStream;
pub use xcorr::sliding_xcorr;
