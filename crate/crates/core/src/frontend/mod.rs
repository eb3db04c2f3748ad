//! Everything between a DAC and an ADC: transmitter/receiver impairments,
//! multipath, passive isolation and the active analog cancellation tap.

mod analog;
mod channel;
mod impairments;

pub use analog::{analog_cancel, apply_passive_isolation, tune_active_tap, ActiveTap, AnalogCancelConfig};
pub use channel::{add_noise, apply_channel, ChannelRealization, ChannelTap};
pub use impairments::{
    adc_quantize, apply_impairments, imd_limited_depth_db, quantize, ImpairmentConfig, IqImbalance, PaModel,
    DEFAULT_FULL_SCALE,
};
