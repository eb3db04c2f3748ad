use crate::waveform::{FrameConfig, ResourceGrid, RsPattern};
use crate::{Error, Result, Sample};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimateKind {
    /// Peer transmitter to this receiver.
    InterNode,
    /// This node's own transmitter to its receiver (residual SI).
    IntraNode,
}

/// LS estimates at the RS cells of one OFDM symbol: `(used index, H)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseEstimate {
    pub frame_symbol: usize,
    pub cells: Vec<(usize, Sample)>,
}

/// Per-used-subcarrier channel for one RS-bearing symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelEstimate {
    pub frame_symbol: usize,
    pub kind: EstimateKind,
    pub h: Vec<Sample>,
}

/// `H = Y / X` at every RS cell of `pattern` present in `grid`. Rows are
/// mapped to frame symbols through `grid.first_symbol`.
pub fn ls_estimate_rs(grid: &ResourceGrid, pattern: &RsPattern, symbols_per_frame: usize) -> Vec<SparseEstimate> {
    (0..grid.num_symbols)
        .filter_map(|row| {
            let frame_symbol = (grid.first_symbol + row) % symbols_per_frame;
            if !pattern.is_rs_symbol(frame_symbol) {
                return None;
            }
            let cells = pattern
                .subcarriers()
                .map(|u| {
                    let x = pattern.value_at(frame_symbol, u).expect("RS symbol");
                    (u, grid.value(row, u) / x)
                })
                .collect();
            Some(SparseEstimate { frame_symbol, cells })
        })
        .collect()
}

/// Linear interpolation in subcarrier frequency between neighbouring RS
/// cells; subcarriers outside the RS span take the nearest RS value.
pub fn interpolate_linear(
    sparse: &SparseEstimate,
    cfg: &FrameConfig,
    kind: EstimateKind,
) -> Result<ChannelEstimate> {
    if sparse.cells.len() < 2 {
        return Err(Error::Estimation(format!(
            "symbol {} has {} RS cells, need at least 2",
            sparse.frame_symbol,
            sparse.cells.len()
        )));
    }
    let pts: Vec<(f64, Sample)> = sparse
        .cells
        .iter()
        .map(|&(u, h)| (cfg.subcarrier_of(u) as f64, h))
        .collect();
    let mut h = Vec::with_capacity(cfg.used_subcarriers);
    let mut seg = 0;
    for u in 0..cfg.used_subcarriers {
        let k = cfg.subcarrier_of(u) as f64;
        let v = if k <= pts[0].0 {
            pts[0].1
        } else if k >= pts[pts.len() - 1].0 {
            pts[pts.len() - 1].1
        } else {
            while pts[seg + 1].0 < k {
                seg += 1;
            }
            let (k0, h0) = pts[seg];
            let (k1, h1) = pts[seg + 1];
            let t = (k - k0) / (k1 - k0);
            h0 + (h1 - h0) * t
        };
        h.push(v);
    }
    Ok(ChannelEstimate {
        frame_symbol: sparse.frame_symbol,
        kind,
        h,
    })
}

/// LS + interpolation for one pattern over every RS symbol in the grid.
pub fn estimate_pattern(
    grid: &ResourceGrid,
    cfg: &FrameConfig,
    node: u8,
    kind: EstimateKind,
) -> Result<Vec<ChannelEstimate>> {
    let pattern = RsPattern::new(cfg, node);
    ls_estimate_rs(grid, &pattern, cfg.symbols_per_frame())
        .iter()
        .map(|s| interpolate_linear(s, cfg, kind))
        .collect()
}

/// Inter-node estimates from the peer's RS, intra-node from the node's own.
pub fn estimate_both(
    grid: &ResourceGrid,
    cfg: &FrameConfig,
) -> Result<(Vec<ChannelEstimate>, Vec<ChannelEstimate>)> {
    let inter = estimate_pattern(grid, cfg, cfg.peer_id(), EstimateKind::InterNode)?;
    let intra = estimate_pattern(grid, cfg, cfg.node_id, EstimateKind::IntraNode)?;
    Ok((inter, intra))
}

/// Estimates held constant from one RS symbol to the next.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelTrack {
    estimates: Vec<ChannelEstimate>,
}

impl ChannelTrack {
    pub fn new(mut estimates: Vec<ChannelEstimate>) -> Result<Self> {
        if estimates.is_empty() {
            return Err(Error::Estimation("no RS symbols to track".into()));
        }
        estimates.sort_by_key(|e| e.frame_symbol);
        Ok(Self { estimates })
    }

    /// Most recent estimate at or before `frame_symbol`; the earliest one
    /// for symbols that precede every RS symbol.
    pub fn at(&self, frame_symbol: usize) -> &ChannelEstimate {
        let i = self.estimates.partition_point(|e| e.frame_symbol <= frame_symbol);
        &self.estimates[i.saturating_sub(1)]
    }

    pub fn estimates(&self) -> &[ChannelEstimate] {
        &self.estimates
    }
}
