use crate::waveform::ResourceGrid;
use crate::{Error, Result, Sample};

/// Channel gains with magnitude below this are treated as erasures by ZF.
pub const ZF_FLOOR: f64 = 1e-6;

/// The node's own transmitted frames in the frequency domain, addressed by
/// a running symbol counter (frame-major).
#[derive(Debug, Clone, Copy)]
pub struct OwnTx<'a> {
    pub frames: &'a [ResourceGrid],
}

impl<'a> OwnTx<'a> {
    pub fn symbols(&self) -> usize {
        self.frames.iter().map(|g| g.num_symbols).sum()
    }

    pub fn symbol(&self, counter: i64) -> Result<&'a [Sample]> {
        if counter < 0 {
            return Err(Error::Alignment(format!("SI symbol counter {counter} precedes the first frame")));
        }
        let mut c = counter as usize;
        for g in self.frames {
            if c < g.num_symbols {
                return Ok(g.row(c));
            }
            c -= g.num_symbols;
        }
        Err(Error::Alignment(format!(
            "SI symbol counter {counter} is past the {} transmitted symbols",
            self.symbols()
        )))
    }
}

/// Which own-transmitted symbol is mixed into the received symbol being
/// decoded. Advances by exactly one symbol per processed symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct CancellerState {
    pub si_start_index: i64,
    counter: i64,
}

impl CancellerState {
    pub fn new(si_start_index: i64, first_counter: i64) -> Self {
        Self {
            si_start_index,
            counter: first_counter,
        }
    }

    pub fn counter(&self) -> i64 {
        self.counter
    }

    pub fn advance(&mut self) {
        self.counter += 1;
    }
}

/// `SI[k] = H_intra[k] X_own[k]` for the counter-selected own symbol.
pub fn rebuild_si(state: &CancellerState, own: &OwnTx<'_>, h_intra: &[Sample]) -> Result<Vec<Sample>> {
    let x = own.symbol(state.counter())?;
    if x.len() != h_intra.len() {
        return Err(Error::Alignment(format!(
            "estimate covers {} subcarriers, symbol has {}",
            h_intra.len(),
            x.len()
        )));
    }
    Ok(x.iter().zip(h_intra).map(|(x, h)| x * h).collect())
}

pub fn cancel_digital(y: &[Sample], rebuilt_si: &[Sample]) -> Vec<Sample> {
    y.iter().zip(rebuilt_si).map(|(y, s)| y - s).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Equalized {
    pub values: Vec<Sample>,
    /// Subcarriers whose estimate fell below [`ZF_FLOOR`].
    pub erased: Vec<bool>,
}

impl Equalized {
    pub fn erasures(&self) -> usize {
        self.erased.iter().filter(|e| **e).count()
    }
}

pub fn zf_equalize(y: &[Sample], h_inter: &[Sample]) -> Equalized {
    let mut erased = vec![false; y.len()];
    let values = y
        .iter()
        .zip(h_inter)
        .enumerate()
        .map(|(i, (y, h))| {
            if h.norm() < ZF_FLOOR {
                erased[i] = true;
                Sample::new(0.0, 0.0)
            } else {
                y / h
            }
        })
        .collect();
    Equalized { values, erased }
}
