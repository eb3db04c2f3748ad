//! Golden-vector files: raw IQ as interleaved little-endian `f32` pairs
//! (`<stem>.iq`) plus a `key = value` text sidecar (`<stem>.txt`).

use std::fs;
use std::path::{Path, PathBuf};

use super::{Profile, QamOrder};
use crate::{Error, Result, Sample};

#[derive(Debug, Clone, PartialEq)]
pub struct GoldenHeader {
    pub profile: Profile,
    pub node_id: u8,
    pub qam_order: QamOrder,
    pub seed: u64,
}

impl GoldenHeader {
    fn render(&self, samples: usize) -> String {
        format!(
            "profile = {}\nnode_id = {}\nqam_order = {}\nseed = {}\nsamples = {}\n",
            self.profile.name(),
            self.node_id,
            self.qam_order.order(),
            self.seed,
            samples
        )
    }
}

/// Write one stream; returns the paths of the IQ file and its sidecar.
pub fn write_golden(
    dir: &Path,
    stem: &str,
    header: &GoldenHeader,
    samples: &[Sample],
) -> Result<(PathBuf, PathBuf)> {
    fs::create_dir_all(dir)?;
    let iq_path = dir.join(format!("{stem}.iq"));
    let hdr_path = dir.join(format!("{stem}.txt"));
    let mut bytes = Vec::with_capacity(samples.len() * 8);
    for s in samples {
        bytes.extend_from_slice(&(s.re as f32).to_le_bytes());
        bytes.extend_from_slice(&(s.im as f32).to_le_bytes());
    }
    fs::write(&iq_path, bytes)?;
    fs::write(&hdr_path, header.render(samples.len()))?;
    Ok((iq_path, hdr_path))
}

pub fn read_iq(path: &Path) -> Result<Vec<Sample>> {
    let bytes = fs::read(path)?;
    if bytes.len() % 8 != 0 {
        return Err(Error::Config(format!(
            "{}: length {} is not a whole number of f32 IQ pairs",
            path.display(),
            bytes.len()
        )));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| {
            let re = f32::from_le_bytes([c[0], c[1], c[2], c[3]]);
            let im = f32::from_le_bytes([c[4], c[5], c[6], c[7]]);
            Sample::new(re as f64, im as f64)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_is_interleaved_le_f32() {
        let dir = tempfile::tempdir().unwrap();
        let h = GoldenHeader {
            profile: Profile::Fd20Mhz,
            node_id: 1,
            qam_order: QamOrder::Qam16,
            seed: 9,
        };
        let s = [Sample::new(1.0, -2.0), Sample::new(0.5, 0.25)];
        let (iq, txt) = write_golden(dir.path(), "x", &h, &s).unwrap();
        let raw = fs::read(&iq).unwrap();
        assert_eq!(&raw[..4], &1.0f32.to_le_bytes());
        assert_eq!(&raw[4..8], &(-2.0f32).to_le_bytes());
        assert_eq!(read_iq(&iq).unwrap(), s.to_vec());
        let text = fs::read_to_string(txt).unwrap();
        assert!(text.contains("profile = fd_20mhz"));
        assert!(text.contains("node_id = 1"));
        assert!(text.contains("qam_order = 16"));
        assert!(text.contains("seed = 9"));
    }
}
