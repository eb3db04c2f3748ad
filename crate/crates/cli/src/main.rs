mod plot;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use duplexsim::dsp::{db10, psd_welch};
use duplexsim::harness::{
    load_suite, node_tx, parse_suite, run_scenario_detailed, run_suite, write_csv, write_dumps,
    Scenario, SuiteOptions, SuiteResult, PSD_NFFT,
};
use duplexsim::metrics::LinkReport;
use duplexsim::selftest;
use duplexsim::waveform::{write_golden, FrameConfig, GoldenHeader, Profile, QamOrder};

use plot::{Canvas, Range, PALETTE};

const BUILTIN_SUITE: &str = include_str!("../../../scenarios/link_suite.toml");
const BUILTIN_NAME: &str = "scenarios/link_suite.toml";

#[derive(Parser)]
#[command(name = "duplexsim", version, about = "Full-duplex OFDM link simulator")]
struct Cli {
    /// Scenario suite (TOML). Defaults to the built-in reference suite.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
    /// Replace every scenario's seed.
    #[arg(long, global = true)]
    seed_override: Option<u64>,
    /// Also write raw receiver captures as IQ golden files.
    #[arg(long, global = true)]
    dump_iq: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a whole suite and write results.csv plus per-scenario dumps.
    Run {
        /// Run scenarios one after another.
        #[arg(long)]
        serial: bool,
    },
    /// Run a single scenario and print its report.
    Demo {
        #[arg(long, default_value = "constellation_analog_digital")]
        scenario: String,
    },
    /// Regenerate the transmit golden vectors for both profiles and nodes.
    Goldens {
        #[arg(long, default_value_t = 1)]
        frames: usize,
    },
    /// Run the invariant checks.
    Selftest,
    /// Render constellation, PSD and cancellation-profile PNGs.
    Plot {
        /// Only this scenario; all scenarios otherwise.
        #[arg(long)]
        scenario: Option<String>,
    },
}

fn scenarios(cli: &Cli) -> Result<Vec<Scenario>> {
    let mut list = match &cli.config {
        Some(p) => load_suite(p)?,
        None => parse_suite(BUILTIN_SUITE, BUILTIN_NAME)?,
    };
    if let Some(seed) = cli.seed_override {
        for s in &mut list {
            s.seed = seed;
        }
    }
    Ok(list)
}

fn pick(list: Vec<Scenario>, id: &str) -> Result<Scenario> {
    let known: Vec<String> = list.iter().map(|s| s.id.clone()).collect();
    match list.into_iter().find(|s| s.id == id) {
        Some(s) => Ok(s),
        None => bail!("no scenario `{id}`; available: {}", known.join(", ")),
    }
}

fn fmt_db(v: Option<f64>) -> String {
    v.map_or("-".into(), |v| format!("{v:.1} dB"))
}

fn print_report(r: &LinkReport) {
    println!("{} (seed {}, {}, {}-QAM, SNR {:.1} dB)", r.scenario_id, r.seed, r.duplex_mode.name(), r.qam_order.order(), r.snr_db);
    println!("  analog passive  {}", fmt_db(r.analog_passive_db));
    println!("  analog total    {}", fmt_db(r.analog_total_db));
    println!("  digital         {}", fmt_db(r.digital_db));
    println!("  total           {}", fmt_db(r.total_cancellation_db));
    if let Some(b) = r.imd_limited_db {
        println!("  IMD-limited     {b:.1} dB (linear digital cancellation ceiling)");
    }
    println!("  EVM             {:.3} %", r.evm_percent);
    println!("  BER             {:.3e}", r.ber);
    println!("  throughput      {:.3} Mb/s", r.throughput_bps / 1e6);
    for e in &r.errors {
        println!("  error: {e}");
    }
}

fn report_failures(result: &SuiteResult) {
    for (id, e) in &result.failures {
        eprintln!("scenario {id} failed: {e}");
    }
    for r in result.reports.iter().filter(|r| !r.errors.is_empty()) {
        eprintln!("scenario {} recorded {} error(s): {}", r.scenario_id, r.errors.len(), r.errors.join("; "));
    }
}

fn cmd_run(cli: &Cli, serial: bool) -> Result<bool> {
    let list = scenarios(cli)?;
    let opts = SuiteOptions {
        seed_override: None,
        parallel: !serial,
        dump_dir: Some(cli.out_dir.clone()),
        dump_iq: cli.dump_iq,
    };
    let result = run_suite(&list, &opts)?;
    let csv = cli.out_dir.join("results.csv");
    write_csv(&csv, &result)?;
    print!("{}", result.csv());
    eprintln!("{} report(s) written to {}", result.reports.len(), csv.display());
    report_failures(&result);
    Ok(result.all_ok())
}

fn cmd_demo(cli: &Cli, id: &str) -> Result<bool> {
    let s = pick(scenarios(cli)?, id)?;
    let run = run_scenario_detailed(&s)?;
    write_dumps(&cli.out_dir, &s, &run, cli.dump_iq)?;
    print_report(&run.report);
    if let Some(sinr) = run.post_cancel_sinr_db {
        println!("  post-cancel SINR {sinr:.1} dB");
    }
    println!("dumps written to {}", cli.out_dir.display());
    Ok(run.report.errors.is_empty())
}

fn cmd_goldens(cli: &Cli, frames: usize) -> Result<bool> {
    let seed = cli.seed_override.unwrap_or(0);
    for profile in [Profile::Fd20Mhz, Profile::Fdd10Mhz] {
        for (node, qam) in [(0u8, QamOrder::Qpsk), (1u8, QamOrder::Qam64)] {
            let cfg = FrameConfig::new(profile, qam, node);
            let tx = node_tx(&cfg, seed, frames)?;
            let header = GoldenHeader { profile, node_id: node, qam_order: qam, seed };
            let stem = format!("{}_node{node}_qam{}", profile.name(), qam.order());
            let (iq, _) = write_golden(&cli.out_dir, &stem, &header, &tx.baseband.samples)?;
            println!("{} ({} samples)", iq.display(), tx.baseband.len());
        }
    }
    Ok(true)
}

fn cmd_selftest() -> Result<bool> {
    let checks = selftest::run_all();
    for c in &checks {
        println!("{} {:<26} {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    println!("{} of {} checks passed", checks.len() - failed, checks.len());
    Ok(failed == 0)
}

fn save(canvas: &Canvas, path: &Path) -> Result<()> {
    canvas.save(path).with_context(|| format!("writing {}", path.display()))?;
    println!("{}", path.display());
    Ok(())
}

fn plot_scenario(dir: &Path, s: &Scenario) -> Result<bool> {
    let run = run_scenario_detailed(s)?;
    let Some(obs) = &run.observed else {
        bail!("scenario {} produced no decoded direction", s.id);
    };

    let points: Vec<(f64, f64)> = obs
        .decoded
        .iter()
        .flat_map(|sym| sym.equalized.iter().map(|z| (z.re, z.im)))
        .collect();
    let lim = Range { lo: -1.6, hi: 1.6 };
    let mut c = Canvas::new(lim, lim);
    c.hguide(0.0);
    c.vguide(0.0);
    c.scatter(&points, PALETTE[0]);
    save(&c, &dir.join(format!("{}_constellation.png", s.id)))?;

    let cfg = s.node_cfg(0);
    let cap = &obs.capture;
    let freq = |i: usize| (i as f64 - (PSD_NFFT / 2) as f64) * cfg.sample_rate_hz / PSD_NFFT as f64 / 1e6;
    let series: Vec<Vec<(f64, f64)>> = [cap.own_pa.as_ref(), cap.si_passive.as_ref(), cap.si_residual.as_ref(), Some(&cap.desired), Some(&cap.rx)]
        .into_iter()
        .flatten()
        .map(|x| {
            psd_welch(&x.samples, PSD_NFFT)
                .into_iter()
                .enumerate()
                .map(|(i, p)| (freq(i), db10(p.max(1e-300))))
                .collect()
        })
        .collect();
    let ys: Vec<f64> = series.iter().flatten().map(|p| p.1).filter(|v| *v > -250.0).collect();
    let mut c = Canvas::new(Range { lo: freq(0), hi: freq(PSD_NFFT - 1) }, Range::of(&ys));
    for (k, line) in series.iter().enumerate() {
        c.line(line, PALETTE[k % PALETTE.len()]);
    }
    save(&c, &dir.join(format!("{}_psd.png", s.id)))?;

    if let Some((before, after)) = &obs.digital_profile {
        let to_line = |v: &[f64]| -> Vec<(f64, f64)> {
            v.iter().enumerate().map(|(u, p)| (cfg.subcarrier_of(u) as f64, db10(p.max(1e-300)))).collect()
        };
        let (b, a) = (to_line(before), to_line(after));
        let ys: Vec<f64> = b.iter().chain(&a).map(|p| p.1).filter(|v| *v > -250.0).collect();
        let xs: Vec<f64> = b.iter().map(|p| p.0).collect();
        let mut c = Canvas::new(Range::of(&xs), Range::of(&ys));
        c.line(&b, PALETTE[3]);
        c.line(&a, PALETTE[0]);
        save(&c, &dir.join(format!("{}_digital.png", s.id)))?;
    }
    Ok(run.report.errors.is_empty())
}

fn cmd_plot(cli: &Cli, only: Option<&str>) -> Result<bool> {
    let list = scenarios(cli)?;
    let list = match only {
        Some(id) => vec![pick(list, id)?],
        None => list,
    };
    std::fs::create_dir_all(&cli.out_dir)?;
    let mut ok = true;
    for s in &list {
        ok &= plot_scenario(&cli.out_dir, s)?;
    }
    Ok(ok)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Run { serial } => cmd_run(&cli, *serial),
        Command::Demo { scenario } => cmd_demo(&cli, scenario),
        Command::Goldens { frames } => cmd_goldens(&cli, *frames),
        Command::Selftest => cmd_selftest(),
        Command::Plot { scenario } => cmd_plot(&cli, scenario.as_deref()),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
