//! Gray-mapped square QAM with the LTE bit-to-symbol convention: even bits
//! (b0, b2, b4) select the in-phase level, odd bits the quadrature level,
//! the first bit of each axis carries the sign.

use super::QamOrder;
use crate::{Error, Result, Sample};

fn axis_bits(order: QamOrder) -> usize {
    order.bits_per_symbol() / 2
}

fn scale(order: QamOrder) -> f64 {
    match order {
        QamOrder::Qpsk => 1.0 / 2f64.sqrt(),
        QamOrder::Qam16 => 1.0 / 10f64.sqrt(),
        QamOrder::Qam64 => 1.0 / 42f64.sqrt(),
    }
}

/// Unnormalized amplitude of one axis from its bits (most significant first).
fn axis_level(bits: &[u8]) -> f64 {
    let s = |b: u8| 1.0 - 2.0 * b as f64;
    match bits {
        [b0] => s(*b0),
        [b0, b1] => s(*b0) * (2.0 - s(*b1)),
        [b0, b1, b2] => s(*b0) * (4.0 - s(*b1) * (2.0 - s(*b2))),
        _ => unreachable!("axis carries 1 to 3 bits"),
    }
}

/// Levels of one axis indexed by the integer value of their bit label.
fn axis_table(order: QamOrder) -> Vec<f64> {
    let m = axis_bits(order);
    (0..1usize << m)
        .map(|label| {
            let bits: Vec<u8> = (0..m).map(|i| ((label >> (m - 1 - i)) & 1) as u8).collect();
            axis_level(&bits) * scale(order)
        })
        .collect()
}

pub fn qam_map(bits: &[u8], order: QamOrder) -> Result<Vec<Sample>> {
    let bps = order.bits_per_symbol();
    if !bits.len().is_multiple_of(bps) {
        return Err(Error::Config(format!(
            "{} bits is not a multiple of {bps} bits per symbol",
            bits.len()
        )));
    }
    let m = axis_bits(order);
    let norm = scale(order);
    let mut ibits = [0u8; 3];
    let mut qbits = [0u8; 3];
    Ok(bits
        .chunks_exact(bps)
        .map(|chunk| {
            for j in 0..m {
                ibits[j] = chunk[2 * j] & 1;
                qbits[j] = chunk[2 * j + 1] & 1;
            }
            Sample::new(axis_level(&ibits[..m]) * norm, axis_level(&qbits[..m]) * norm)
        })
        .collect())
}

/// All constellation points indexed by the integer value of their bit label.
pub fn qam_points(order: QamOrder) -> Vec<Sample> {
    let bps = order.bits_per_symbol();
    (0..1usize << bps)
        .map(|label| {
            let bits: Vec<u8> = (0..bps).map(|i| ((label >> (bps - 1 - i)) & 1) as u8).collect();
            qam_map(&bits, order).unwrap()[0]
        })
        .collect()
}

fn decide_axis(value: f64, table: &[f64]) -> usize {
    // strict `<` keeps the lower label on an exact tie
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (label, &level) in table.iter().enumerate() {
        let d = (value - level).abs();
        if d < best_d {
            best_d = d;
            best = label;
        }
    }
    best
}

/// Minimum-distance hard decision. The square grid makes the decision
/// separable per axis; an exact tie resolves to the lower-index point.
pub fn qam_demap(symbols: &[Sample], order: QamOrder) -> Vec<u8> {
    let m = axis_bits(order);
    let table = axis_table(order);
    let mut out = Vec::with_capacity(symbols.len() * 2 * m);
    for s in symbols {
        let il = decide_axis(s.re, &table);
        let ql = decide_axis(s.im, &table);
        for j in 0..m {
            out.push(((il >> (m - 1 - j)) & 1) as u8);
            out.push(((ql >> (m - 1 - j)) & 1) as u8);
        }
    }
    out
}
