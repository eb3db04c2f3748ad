use super::config::{FrameConfig, RS_STRIDE, RS_SYMBOLS_PER_SLOT};
use super::pss::{generate_pss, pss_root};
use super::qam::qam_map;
use crate::{Error, Result, Sample};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CellKind {
    Data,
    Rs,
    Pss,
    Null,
}

/// Reference-symbol placement and values of one node.
///
/// Stride-6 comb on the used subcarriers, offset 0 for node 0 and 3 for
/// node 1, in OFDM symbols 0 and 3 of every slot. The two nodes' combs
/// never share a cell.
#[derive(Debug, Clone, PartialEq)]
pub struct RsPattern {
    pub node_id: u8,
    pub subcarrier_offset: usize,
    pub subcarrier_stride: usize,
    pub symbol_indices: [usize; 2],
    symbols_per_slot: usize,
    per_symbol: usize,
    /// One frame of RS values, symbol-major.
    pub rs_values: Vec<Sample>,
}

const RS_SEEDS: [u32; 2] = [0x2545_F491, 0x9E37_79B9];

impl RsPattern {
    pub fn new(cfg: &FrameConfig, node_id: u8) -> Self {
        let per_symbol = cfg.used_subcarriers / RS_STRIDE;
        let rs_symbols = cfg.slots_per_frame * RS_SYMBOLS_PER_SLOT.len();
        let mut state = RS_SEEDS[node_id as usize];
        let r = 1.0 / 2f64.sqrt();
        let rs_values = (0..rs_symbols * per_symbol)
            .map(|_| {
                state = state.wrapping_mul(1_664_525).wrapping_add(1_013_904_223);
                let i = if state & 0x8000_0000 != 0 { -r } else { r };
                let q = if state & 0x4000_0000 != 0 { -r } else { r };
                Sample::new(i, q)
            })
            .collect();
        Self {
            node_id,
            subcarrier_offset: FrameConfig::rs_offset(node_id),
            subcarrier_stride: RS_STRIDE,
            symbol_indices: RS_SYMBOLS_PER_SLOT,
            symbols_per_slot: cfg.symbols_per_slot,
            per_symbol,
            rs_values,
        }
    }

    pub fn is_rs_symbol(&self, frame_sym: usize) -> bool {
        self.symbol_indices
            .contains(&(frame_sym % self.symbols_per_slot))
    }

    /// Used-subcarrier slots carrying RS in an RS symbol, ascending.
    pub fn subcarriers(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.per_symbol).map(move |i| self.subcarrier_offset + i * self.subcarrier_stride)
    }

    pub fn contains(&self, frame_sym: usize, u: usize) -> bool {
        self.is_rs_symbol(frame_sym)
            && u % self.subcarrier_stride == self.subcarrier_offset
            && u / self.subcarrier_stride < self.per_symbol
    }

    /// Known RS value at a cell, `None` if the cell is not part of the pattern.
    pub fn value_at(&self, frame_sym: usize, u: usize) -> Option<Sample> {
        if !self.contains(frame_sym, u) {
            return None;
        }
        let slot = frame_sym / self.symbols_per_slot;
        let within = frame_sym % self.symbols_per_slot;
        let ordinal = slot * self.symbol_indices.len()
            + self.symbol_indices.iter().position(|&s| s == within).unwrap();
        let idx = (ordinal * self.per_symbol + u / self.subcarrier_stride) % self.rs_values.len();
        Some(self.rs_values[idx])
    }
}

/// Role of a cell in a node's transmitted frame.
pub fn layout_kind(cfg: &FrameConfig, frame_sym: usize, u: usize) -> CellKind {
    let frame_sym = frame_sym % cfg.symbols_per_frame();
    let k = cfg.subcarrier_of(u);
    if cfg.is_pss_symbol(frame_sym) && k.unsigned_abs() as usize <= cfg.pss_guard {
        return if k.abs() <= 31 { CellKind::Pss } else { CellKind::Null };
    }
    if cfg.is_rs_symbol(frame_sym) {
        let phase = u % RS_STRIDE;
        if phase == FrameConfig::rs_offset(cfg.node_id) {
            return CellKind::Rs;
        }
        if cfg.mutes_peer_rs() && phase == FrameConfig::rs_offset(cfg.peer_id()) {
            return CellKind::Null;
        }
    }
    CellKind::Data
}

/// Number of data cells in one frame.
pub fn data_capacity(cfg: &FrameConfig) -> usize {
    (0..cfg.symbols_per_frame())
        .map(|s| {
            (0..cfg.used_subcarriers)
                .filter(|&u| layout_kind(cfg, s, u) == CellKind::Data)
                .count()
        })
        .sum()
}

/// Subcarrier x OFDM-symbol lattice over the used subcarriers. DC and the
/// unused band edges are implicitly null.
#[derive(Debug, Clone, PartialEq)]
pub struct ResourceGrid {
    pub fft_size: usize,
    pub used_subcarriers: usize,
    /// Frame symbol index of row 0.
    pub first_symbol: usize,
    pub num_symbols: usize,
    kinds: Vec<CellKind>,
    values: Vec<Sample>,
}

impl ResourceGrid {
    /// Empty grid tagged with the layout of `cfg`'s node.
    pub fn with_layout(cfg: &FrameConfig, first_symbol: usize, num_symbols: usize) -> Self {
        let used = cfg.used_subcarriers;
        let mut kinds = Vec::with_capacity(used * num_symbols);
        for row in 0..num_symbols {
            for u in 0..used {
                kinds.push(layout_kind(cfg, first_symbol + row, u));
            }
        }
        Self {
            fft_size: cfg.fft_size,
            used_subcarriers: used,
            first_symbol,
            num_symbols,
            kinds,
            values: vec![Sample::new(0.0, 0.0); used * num_symbols],
        }
    }

    pub fn kind(&self, row: usize, u: usize) -> CellKind {
        self.kinds[row * self.used_subcarriers + u]
    }

    pub fn value(&self, row: usize, u: usize) -> Sample {
        self.values[row * self.used_subcarriers + u]
    }

    pub fn set_value(&mut self, row: usize, u: usize, v: Sample) {
        self.values[row * self.used_subcarriers + u] = v;
    }

    pub fn row(&self, row: usize) -> &[Sample] {
        &self.values[row * self.used_subcarriers..(row + 1) * self.used_subcarriers]
    }

    pub fn row_mut(&mut self, row: usize) -> &mut [Sample] {
        &mut self.values[row * self.used_subcarriers..(row + 1) * self.used_subcarriers]
    }

    pub fn row_kinds(&self, row: usize) -> &[CellKind] {
        &self.kinds[row * self.used_subcarriers..(row + 1) * self.used_subcarriers]
    }

    /// Tag of the cell at FFT bin `bin`; DC and unused bins are null.
    pub fn kind_at_bin(&self, cfg: &FrameConfig, row: usize, bin: usize) -> CellKind {
        let k = if bin <= self.fft_size / 2 {
            bin as i32
        } else {
            bin as i32 - self.fft_size as i32
        };
        match cfg.used_index_of(k) {
            Some(u) => self.kind(row, u),
            None => CellKind::Null,
        }
    }

    /// Data-cell values in fill order (symbol by symbol, ascending subcarrier).
    pub fn data_values(&self) -> Vec<Sample> {
        self.kinds
            .iter()
            .zip(&self.values)
            .filter(|(k, _)| **k == CellKind::Data)
            .map(|(_, v)| *v)
            .collect()
    }

    pub fn count(&self, kind: CellKind) -> usize {
        self.kinds.iter().filter(|k| **k == kind).count()
    }
}

/// One frame for `cfg.node_id`: data cells filled from `payload_bits` in
/// symbol order, lowest subcarrier first.
pub fn build_frame(cfg: &FrameConfig, payload_bits: &[u8]) -> Result<ResourceGrid> {
    cfg.validate()?;
    let expected = data_capacity(cfg) * cfg.qam_order.bits_per_symbol();
    if payload_bits.len() != expected {
        return Err(Error::Framing {
            expected,
            got: payload_bits.len(),
        });
    }
    let symbols = qam_map(payload_bits, cfg.qam_order)?;
    let pss = generate_pss(pss_root(cfg.node_id))?;
    let rs = RsPattern::new(cfg, cfg.node_id);
    let mut grid = ResourceGrid::with_layout(cfg, 0, cfg.symbols_per_frame());
    let mut data = symbols.into_iter();
    for row in 0..grid.num_symbols {
        for u in 0..grid.used_subcarriers {
            let v = match grid.kind(row, u) {
                CellKind::Data => data.next().expect("payload sized to capacity"),
                CellKind::Rs => rs.value_at(row, u).expect("layout and pattern agree"),
                CellKind::Pss => pss.at(cfg.subcarrier_of(u)).expect("PSS band"),
                CellKind::Null => continue,
            };
            grid.set_value(row, u, v);
        }
    }
    Ok(grid)
}

/// Frame with RS and PSS in place and every data cell left at zero.
pub fn pilot_frame(cfg: &FrameConfig) -> Result<ResourceGrid> {
    let zeros = vec![0u8; data_capacity(cfg) * cfg.qam_order.bits_per_symbol()];
    let mut grid = build_frame(cfg, &zeros)?;
    for row in 0..grid.num_symbols {
        for u in 0..grid.used_subcarriers {
            if grid.kind(row, u) == CellKind::Data {
                grid.set_value(row, u, Sample::new(0.0, 0.0));
            }
        }
    }
    Ok(grid)
}
