use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use toml::Spanned;

use crate::frontend::{AnalogCancelConfig, ChannelRealization, ChannelTap, ImpairmentConfig};
use crate::registry::{digital_cancellers, sync_strategies};
use crate::waveform::{FrameConfig, Profile, QamOrder};
use crate::{Error, Result, Sample};

/// One multipath component: delay in samples, power gain in dB, phase in
/// degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TapSpec {
    pub delay: usize,
    pub gain_db: f64,
    #[serde(default)]
    pub phase_deg: f64,
}

impl TapSpec {
    pub fn to_tap(self) -> ChannelTap {
        ChannelTap {
            delay: self.delay,
            gain: Sample::from_polar(10f64.powf(self.gain_db / 20.0), self.phase_deg.to_radians()),
        }
    }
}

pub fn channel_from(taps: &[TapSpec]) -> ChannelRealization {
    ChannelRealization {
        taps: taps.iter().map(|t| t.to_tap()).collect(),
        noise_power: 0.0,
    }
}

fn default_snr() -> f64 {
    30.0
}
fn default_frames() -> usize {
    1
}
fn default_canceller() -> String {
    "frequency_domain".into()
}
fn default_sync() -> String {
    "si_suppressed".into()
}
fn default_offset() -> i64 {
    200
}
/// Direct coupling plus one weak reflection the single-tap active canceller
/// cannot reach.
fn default_si_channel() -> Vec<TapSpec> {
    vec![
        TapSpec { delay: 0, gain_db: 0.0, phase_deg: 0.0 },
        TapSpec { delay: 2, gain_db: -25.0, phase_deg: 45.0 },
    ]
}
fn default_desired_channel() -> Vec<TapSpec> {
    vec![TapSpec { delay: 0, gain_db: -70.0, phase_deg: 0.0 }]
}

/// One experiment. Node 0 is the observed node: it transmits `qam_down`
/// and receives `qam_up` from node 1. Node 1 runs the mirror receiver so
/// goodput covers both directions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub id: String,
    pub profile: Profile,
    pub qam_down: QamOrder,
    pub qam_up: QamOrder,
    /// Desired-signal power over receiver noise, per sample over the full
    /// sampled band, at the receiver input.
    #[serde(default = "default_snr")]
    pub snr_db: f64,
    /// SI path after passive isolation (full-duplex profile only).
    #[serde(default = "default_si_channel")]
    pub si_channel: Vec<TapSpec>,
    /// Peer-to-node path, including path loss.
    #[serde(default = "default_desired_channel")]
    pub desired_channel: Vec<TapSpec>,
    #[serde(default)]
    pub impairments: ImpairmentConfig,
    #[serde(default)]
    pub analog: AnalogCancelConfig,
    #[serde(default = "default_canceller")]
    pub digital_canceller: String,
    #[serde(default = "default_sync")]
    pub sync: String,
    /// Samples by which the peer's frames trail the receiver's own frame
    /// boundary.
    #[serde(default = "default_offset")]
    pub peer_offset_samples: i64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_frames")]
    pub num_frames: usize,
}

impl Scenario {
    /// A full-duplex scenario with every default applied.
    pub fn new(id: &str, profile: Profile, qam_down: QamOrder, qam_up: QamOrder) -> Self {
        Scenario {
            id: id.into(),
            profile,
            qam_down,
            qam_up,
            snr_db: default_snr(),
            si_channel: default_si_channel(),
            desired_channel: default_desired_channel(),
            impairments: ImpairmentConfig::default(),
            analog: AnalogCancelConfig::default(),
            digital_canceller: default_canceller(),
            sync: default_sync(),
            peer_offset_samples: default_offset(),
            seed: 0,
            num_frames: default_frames(),
        }
    }

    pub fn node_cfg(&self, node: u8) -> FrameConfig {
        let q = if node == 0 { self.qam_down } else { self.qam_up };
        FrameConfig::new(self.profile, q, node)
    }

    pub fn is_full_duplex(&self) -> bool {
        self.profile == Profile::Fd20Mhz
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(format!("scenario `{}`: {m}", self.id)));
        if self.id.is_empty() || self.id.contains([',', '\n', '"']) {
            return bad("id must be non-empty and free of commas, quotes and newlines".into());
        }
        if self.num_frames == 0 {
            return bad("num_frames must be at least 1".into());
        }
        if !self.snr_db.is_finite() {
            return bad(format!("snr_db {} is not finite", self.snr_db));
        }
        let cfg = self.node_cfg(0);
        cfg.validate()?;
        if self.peer_offset_samples < 0 || self.peer_offset_samples >= cfg.half_frame_len_samples() as i64 {
            return bad(format!(
                "peer_offset_samples {} must lie in [0, {})",
                self.peer_offset_samples,
                cfg.half_frame_len_samples()
            ));
        }
        if self.is_full_duplex() {
            channel_from(&self.si_channel).validate_si(cfg.cp_len)?;
        }
        channel_from(&self.desired_channel).validate()?;
        self.analog.validate()?;
        self.impairments.validate()?;
        sync_strategies().get(&self.sync)?;
        digital_cancellers().get(&self.digital_canceller)?;
        Ok(())
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SuiteFile {
    #[serde(default)]
    scenario: Vec<Spanned<Scenario>>,
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.rfind('\n').map_or(before.len(), |nl| before.len() - nl - 1) + 1;
    (line, col)
}

/// Parse a suite: a TOML document of `[[scenario]]` tables. Errors carry the
/// line and column of the offending table or field.
pub fn parse_suite(text: &str, path: &str) -> Result<Vec<Scenario>> {
    let perr = |offset: usize, message: String| {
        let (line, column) = line_col(text, offset);
        Error::Parse { path: path.into(), line, column, message }
    };
    let file: SuiteFile = toml::from_str(text).map_err(|e| {
        let offset = e.span().map_or(0, |s| s.start);
        perr(offset, e.message().trim().to_string())
    })?;
    let mut seen: HashMap<String, usize> = HashMap::new();
    let mut out = Vec::with_capacity(file.scenario.len());
    for sp in file.scenario {
        let start = sp.span().start;
        let s = sp.into_inner();
        if let Some(prev) = seen.insert(s.id.clone(), start) {
            let (line, _) = line_col(text, prev);
            return Err(perr(start, format!("duplicate scenario_id `{}` (first defined on line {line})", s.id)));
        }
        s.validate().map_err(|e| perr(start, e.to_string()))?;
        out.push(s);
    }
    Ok(out)
}

pub fn load_suite(path: &Path) -> Result<Vec<Scenario>> {
    let text = std::fs::read_to_string(path)?;
    parse_suite(&text, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[[scenario]]
id = "a"
profile = "fd_20mhz"
qam_down = 4
qam_up = 64
"#;

    #[test]
    fn defaults_fill_in() {
        let s = parse_suite(MINIMAL, "t.toml").unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s[0], Scenario::new("a", Profile::Fd20Mhz, QamOrder::Qpsk, QamOrder::Qam64));
    }

    #[test]
    fn empty_suite_is_fine() {
        assert!(parse_suite("", "t.toml").unwrap().is_empty());
    }

    #[test]
    fn duplicate_id_is_rejected_with_position() {
        let text = format!("{MINIMAL}\n{MINIMAL}");
        match parse_suite(&text, "t.toml") {
            Err(Error::Parse { line, message, .. }) => {
                assert_eq!(line, 9);
                assert!(message.contains("duplicate"), "{message}");
                assert!(message.contains("line 2"), "{message}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bad_field_reports_line() {
        let text = "[[scenario]]\nid = \"a\"\nprofile = \"fd_20mhz\"\nqam_down = 8\nqam_up = 4\n";
        match parse_suite(text, "t.toml") {
            Err(Error::Parse { line, message, .. }) => {
                assert_eq!(line, 4, "{message}");
                assert!(message.contains("QAM"), "{message}");
            }
            other => panic!("{other:?}"),
        }
        let text = "[[scenario]]\nid = \"a\"\nprofile = \"fd_20mhz\"\nqam_down = 4\nqam_up = 4\ncolour = 1\n";
        assert!(matches!(parse_suite(text, "t.toml"), Err(Error::Parse { line: 6, .. })));
    }

    #[test]
    fn semantic_checks() {
        let mut s = Scenario::new("x", Profile::Fd20Mhz, QamOrder::Qpsk, QamOrder::Qpsk);
        s.validate().unwrap();
        s.sync = "psychic".into();
        assert!(matches!(s.validate(), Err(Error::UnknownStrategy { .. })));
        s.sync = "dual_pss".into();
        s.si_channel = vec![TapSpec { delay: 600, gain_db: 0.0, phase_deg: 0.0 }];
        assert!(s.validate().is_err());
    }

    #[test]
    fn shipped_suites_parse() {
        let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
        let mut n = 0;
        for e in std::fs::read_dir(dir).unwrap() {
            let p = e.unwrap().path();
            if p.extension().is_some_and(|x| x == "toml") {
                load_suite(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
                n += 1;
            }
        }
        assert!(n > 0);
    }

    #[test]
    fn documented_example_parses() {
        let doc = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/README.md")).unwrap();
        let block = doc.split("```toml\n").nth(1).and_then(|b| b.split("```").next()).unwrap();
        let s = parse_suite(block, "README.md").unwrap();
        assert_eq!(s[0].id, "example");
        assert_eq!(s[0].impairments.adc_bits, Some(14));
    }

    #[test]
    fn documented_defaults_hold() {
        let s = Scenario::new("d", Profile::Fd20Mhz, QamOrder::Qpsk, QamOrder::Qpsk);
        assert_eq!(s.si_channel.len(), 2);
        assert_eq!(s.si_channel[1].gain_db, -25.0);
        assert_eq!(s.peer_offset_samples, 200);
        assert_eq!(s.impairments, ImpairmentConfig::off());
        assert!(s.analog.active_enabled && s.analog.auto_tune);
    }
}
