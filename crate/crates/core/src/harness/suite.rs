use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::run::{run_scenario_detailed, ScenarioRun};
use super::scenario::Scenario;
use crate::dsp::{db10, psd_welch, SampleStream};
use crate::metrics::{merge_reports, to_csv, LinkReport};
use crate::waveform::{write_golden, GoldenHeader};
use crate::Result;

/// Points per PSD estimate.
pub const PSD_NFFT: usize = 1024;

#[derive(Debug, Clone, Default)]
pub struct SuiteOptions {
    /// Replaces every scenario's seed.
    pub seed_override: Option<u64>,
    pub parallel: bool,
    /// Write constellation, PSD and cancellation-profile dumps here.
    pub dump_dir: Option<PathBuf>,
    /// Also write the observed node's raw capture as golden IQ.
    pub dump_iq: bool,
}

#[derive(Debug, Clone)]
pub struct SuiteResult {
    pub reports: Vec<LinkReport>,
    /// `(scenario_id, message)` for scenarios that could not run at all.
    pub failures: Vec<(String, String)>,
}

impl SuiteResult {
    pub fn csv(&self) -> String {
        to_csv(&self.reports)
    }

    /// No scenario failed to run and no run recorded a processing error.
    pub fn all_ok(&self) -> bool {
        self.failures.is_empty() && self.reports.iter().all(|r| r.errors.is_empty())
    }
}

/// Run every scenario, each in isolation. The merged reports are sorted by
/// (scenario_id, seed, duplex_mode), so serial and parallel runs agree.
pub fn run_suite(scenarios: &[Scenario], opts: &SuiteOptions) -> Result<SuiteResult> {
    let prepared: Vec<Scenario> = scenarios
        .iter()
        .cloned()
        .map(|mut s| {
            if let Some(seed) = opts.seed_override {
                s.seed = seed;
            }
            s
        })
        .collect();
    let one = |s: &Scenario| -> (String, std::result::Result<LinkReport, String>) {
        let r = run_scenario_detailed(s).map_err(|e| e.to_string()).and_then(|run| {
            if let Some(dir) = &opts.dump_dir {
                write_dumps(dir, s, &run, opts.dump_iq).map_err(|e| e.to_string())?;
            }
            Ok(run.report)
        });
        (s.id.clone(), r)
    };
    let outcomes: Vec<_> = if opts.parallel {
        prepared.par_iter().map(one).collect()
    } else {
        prepared.iter().map(one).collect()
    };
    let mut shards = Vec::new();
    let mut failures = Vec::new();
    for (id, r) in outcomes {
        match r {
            Ok(rep) => shards.push(vec![rep]),
            Err(e) => failures.push((id, e)),
        }
    }
    failures.sort();
    Ok(SuiteResult { reports: merge_reports(shards), failures })
}

pub fn write_csv(path: &Path, result: &SuiteResult) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, result.csv())?;
    Ok(())
}

fn psd_db(x: &SampleStream) -> Vec<f64> {
    psd_welch(&x.samples, PSD_NFFT).into_iter().map(|p| db10(p.max(1e-300))).collect()
}

/// Per-scenario artifacts:
/// - `<id>_constellation.csv`: `re,im` of every equalized data cell
/// - `<id>_psd.csv`: analog-stage PSDs in dB per bin
/// - `<id>_digital.csv`: mean SI power per subcarrier before/after digital
///   cancellation, in dB
/// - `<id>_rx.iq` + `.txt` with `dump_iq`
pub fn write_dumps(dir: &Path, s: &Scenario, run: &ScenarioRun, dump_iq: bool) -> Result<()> {
    fs::create_dir_all(dir)?;
    let Some(obs) = &run.observed else {
        return Ok(());
    };
    let mut c = String::from("symbol,re,im\n");
    for sym in &obs.decoded {
        for z in &sym.equalized {
            writeln!(c, "{},{:.6},{:.6}", sym.index, z.re, z.im).expect("String write");
        }
    }
    fs::write(dir.join(format!("{}_constellation.csv", s.id)), c)?;

    let cfg = s.node_cfg(0);
    let cap = &obs.capture;
    let mut columns: Vec<(&str, Vec<f64>)> = Vec::new();
    if let Some(x) = &cap.own_pa {
        columns.push(("tx_db", psd_db(x)));
    }
    if let Some(x) = &cap.si_passive {
        columns.push(("after_passive_db", psd_db(x)));
    }
    if let Some(x) = &cap.si_residual {
        columns.push(("after_active_db", psd_db(x)));
    }
    columns.push(("desired_db", psd_db(&cap.desired)));
    columns.push(("rx_db", psd_db(&cap.rx)));
    let mut p = String::from("freq_hz");
    for (name, _) in &columns {
        write!(p, ",{name}").expect("String write");
    }
    p.push('\n');
    for i in 0..PSD_NFFT {
        let f = (i as f64 - (PSD_NFFT / 2) as f64) * cfg.sample_rate_hz / PSD_NFFT as f64;
        write!(p, "{f:.1}").expect("String write");
        for (_, v) in &columns {
            write!(p, ",{:.2}", v[i]).expect("String write");
        }
        p.push('\n');
    }
    fs::write(dir.join(format!("{}_psd.csv", s.id)), p)?;

    if let Some((before, after)) = &obs.digital_profile {
        let mut d = String::from("subcarrier,before_db,after_db\n");
        for u in 0..before.len() {
            writeln!(
                d,
                "{},{:.2},{:.2}",
                cfg.subcarrier_of(u),
                db10(before[u].max(1e-300)),
                db10(after[u].max(1e-300))
            )
            .expect("String write");
        }
        fs::write(dir.join(format!("{}_digital.csv", s.id)), d)?;
    }

    if dump_iq {
        let header = GoldenHeader { profile: s.profile, node_id: 0, qam_order: s.qam_down, seed: s.seed };
        write_golden(dir, &format!("{}_rx", s.id), &header, &cap.rx.samples)?;
    }
    Ok(())
}
