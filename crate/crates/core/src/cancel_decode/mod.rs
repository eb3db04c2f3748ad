//! Frequency-domain digital SI cancellation with counter-based symbol
//! alignment, zero-forcing equalization and hard-decision decoding.

mod canceller;
mod pipeline;

pub use canceller::{
    cancel_digital, rebuild_si, zf_equalize, CancellerState, Equalized, OwnTx, ZF_FLOOR,
};
pub use pipeline::{
    decode_frames, DecodedSymbol, DigitalCanceller, ReceiveInputs, QUEUE_DEPTH, WINDOW_BACKOFF,
};

use crate::Sample;

/// Rebuild `H_intra X_own` and subtract it.
#[derive(Debug, Clone, Copy, Default)]
pub struct FrequencyDomainCanceller;

impl DigitalCanceller for FrequencyDomainCanceller {
    fn name(&self) -> &'static str {
        "frequency_domain"
    }

    fn cancel(&self, y: &[Sample], x_own: &[Sample], h_intra: &[Sample]) -> Vec<Sample> {
        let si: Vec<Sample> = x_own.iter().zip(h_intra).map(|(x, h)| x * h).collect();
        cancel_digital(y, &si)
    }
}

/// Pass-through: analog cancellation only.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoCanceller;

impl DigitalCanceller for NoCanceller {
    fn name(&self) -> &'static str {
        "off"
    }

    fn cancel(&self, y: &[Sample], _x_own: &[Sample], _h_intra: &[Sample]) -> Vec<Sample> {
        y.to_vec()
    }
}
