use std::f64::consts::PI;

use super::{FrameConfig, ResourceGrid};
use crate::dsp::{dft_in_place, idft_in_place, SampleStream};
use crate::{Error, Result, Sample};

/// One OFDM symbol: used-subcarrier values to `cp_len + fft_size` samples.
pub fn symbol_to_time(cfg: &FrameConfig, used_values: &[Sample]) -> Vec<Sample> {
    let n = cfg.fft_size;
    let mut bins = vec![Sample::new(0.0, 0.0); n];
    for (u, v) in used_values.iter().enumerate() {
        bins[cfg.bin_of(cfg.subcarrier_of(u))] = *v;
    }
    idft_in_place(&mut bins).expect("fft_size validated as power of two");
    let mut out = Vec::with_capacity(n + cfg.cp_len);
    out.extend_from_slice(&bins[n - cfg.cp_len..]);
    out.extend_from_slice(&bins);
    out
}

/// IFFT + CP for every symbol of the grid. The stream starts at index 0.
pub fn ofdm_modulate(cfg: &FrameConfig, grid: &ResourceGrid) -> SampleStream {
    let mut samples = Vec::with_capacity(grid.num_symbols * cfg.symbol_len());
    for row in 0..grid.num_symbols {
        samples.extend(symbol_to_time(cfg, grid.row(row)));
    }
    SampleStream::new(0, samples)
}

/// FFT of one `fft_size` window, returning the used subcarriers.
pub fn demod_window(cfg: &FrameConfig, window: &[Sample]) -> Vec<Sample> {
    let mut buf = window.to_vec();
    dft_in_place(&mut buf).expect("fft_size validated as power of two");
    (0..cfg.used_subcarriers)
        .map(|u| buf[cfg.bin_of(cfg.subcarrier_of(u))])
        .collect()
}

/// Strip CP and FFT `num_symbols` symbols, the first of which has its CP
/// starting at global index `start_index`. The result is tagged with the
/// layout of `cfg`'s node, starting at frame symbol `first_symbol`.
pub fn ofdm_demodulate(
    cfg: &FrameConfig,
    stream: &SampleStream,
    start_index: i64,
    first_symbol: usize,
    num_symbols: usize,
) -> Result<ResourceGrid> {
    let sym_len = cfg.symbol_len() as i64;
    let needed = num_symbols.max(1) * cfg.symbol_len();
    if start_index < stream.start_index || start_index + needed as i64 > stream.end_index() {
        return Err(Error::Truncation {
            start: start_index,
            needed,
            available: (stream.end_index() - start_index).max(0) as usize,
        });
    }
    let mut grid = ResourceGrid::with_layout(cfg, first_symbol, num_symbols);
    for row in 0..num_symbols {
        let win_start = start_index + row as i64 * sym_len + cfg.cp_len as i64;
        let window = stream.window(win_start, cfg.fft_size)?;
        grid.row_mut(row).copy_from_slice(&demod_window(cfg, window));
    }
    Ok(grid)
}

/// Per-used-subcarrier factor `e^{-j 2 pi k a / N}` picked up when the FFT
/// window starts `advance` samples early (inside the CP).
pub fn phase_ramp(cfg: &FrameConfig, advance: i64) -> Vec<Sample> {
    let n = cfg.fft_size as i64;
    (0..cfg.used_subcarriers)
        .map(|u| {
            let k = cfg.subcarrier_of(u) as i64;
            let reduced = (k * advance).rem_euclid(n) as f64;
            Sample::from_polar(1.0, -2.0 * PI * reduced / n as f64)
        })
        .collect()
}
