use std::f64::consts::PI;

use super::config::PSS_ROOTS;
use crate::{Error, Result, Sample};

pub const PSS_LEN: u32 = 63;

/// Length-63 Zadoff-Chu PSS on subcarriers `k` in `[-31, -1] U [1, 31]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PssSequence {
    pub root_u: u32,
    /// `values[i]` belongs to subcarrier `-31 + i` for `i < 31`, `i - 30` otherwise.
    pub values: Vec<Sample>,
}

impl PssSequence {
    /// `(subcarrier, value)` pairs in ascending subcarrier order.
    pub fn iter(&self) -> impl Iterator<Item = (i32, Sample)> + '_ {
        self.values
            .iter()
            .enumerate()
            .map(|(i, v)| (if i < 31 { i as i32 - 31 } else { i as i32 - 30 }, *v))
    }

    pub fn at(&self, k: i32) -> Option<Sample> {
        match k {
            -31..=-1 => Some(self.values[(k + 31) as usize]),
            1..=31 => Some(self.values[(k + 30) as usize]),
            _ => None,
        }
    }
}

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

pub fn pss_root(node_id: u8) -> u32 {
    PSS_ROOTS[node_id as usize]
}

pub fn generate_pss(root_u: u32) -> Result<PssSequence> {
    if root_u == 0 || gcd(root_u, PSS_LEN) != 1 {
        return Err(Error::Config(format!(
            "PSS root {root_u} is not coprime to {PSS_LEN}"
        )));
    }
    let n = PSS_LEN as f64;
    // reduce the integer phase numerator mod 2N before scaling to keep the
    // argument small
    let phase = |num: i64| {
        let reduced = num.rem_euclid(2 * PSS_LEN as i64) as f64;
        Sample::from_polar(1.0, -PI * reduced / n)
    };
    let values = (-31i64..=31)
        .filter(|&k| k != 0)
        .map(|k| {
            let ru = root_u as i64;
            if k < 0 {
                phase(ru * k * (k + 1))
            } else {
                phase(ru * (k + 1) * (k + 2))
            }
        })
        .collect();
    Ok(PssSequence { root_u, values })
}
