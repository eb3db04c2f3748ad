//! Receiver front blocks: dual PSS timing (desired link and SI loop) and
//! dual LS channel estimation on the two nodes' disjoint RS combs.

mod estimate;
mod suppress;
mod sync;

pub use estimate::{
    estimate_both, estimate_pattern, interpolate_linear, ls_estimate_rs, ChannelEstimate,
    ChannelTrack, EstimateKind, SparseEstimate,
};
pub use suppress::{fit_si, fit_si_best, subtract_si, SiFit, SI_FIT_FIRST_TAP, SI_FIT_LEN, SI_FIT_TAPS};
pub use sync::{
    refine_timing, synchronize, synchronize_with, FineTiming, PssDetector, SyncResult,
    DETECTION_THRESHOLD, FINE_TIMING_BACKOFF,
};
