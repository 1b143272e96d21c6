use std::fs;
use std::io::Write;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use aaa_core::decision::{verify_log, Mismatch, TrialEvent, TrialState};
use aaa_core::dose::calibrate_eta;
use aaa_core::sim::{duration_comparison, render_table, run_replicates, DesignSpec, McmcProfile, ScenarioSpec, TrialRecord};
use aaa_core::CalibrationSpec;
use aaa_service::store::{parse_log, render_log};
use aaa_service::view::StateSnapshot;

#[derive(Parser)]
#[command(name = "aaa", version, about = "Dual-agent dose finding: simulate, calibrate, replay, serve")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Operating characteristics of a design on a scenario.
    Sim {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        design: PathBuf,
        #[arg(long, default_value_t = 100)]
        reps: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Disable adaptive cohort division.
        #[arg(long)]
        no_acd: bool,
        /// Use the long sampler regardless of the design file.
        #[arg(long)]
        paper_mcmc: bool,
        /// Run every seed with and without cohort division and report durations.
        #[arg(long)]
        compare_acd: bool,
        /// Worker threads; defaults to the number of cores.
        #[arg(long)]
        threads: Option<usize>,
        /// Summary JSON.
        #[arg(long)]
        out: PathBuf,
        /// Per-trial records as JSON lines.
        #[arg(long)]
        records: Option<PathBuf>,
    },
    /// Serve the conduct API.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long)]
        data: PathBuf,
        /// Short sampler for trials that do not choose one.
        #[arg(long)]
        fast: bool,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
    },
    /// Utility parameters from the elicited trade-off.
    Calibrate {
        #[arg(long = "pT")]
        p_t: f64,
        #[arg(long)]
        q1: f64,
        #[arg(long)]
        q2: f64,
        #[arg(long = "U")]
        u: f64,
    },
    /// Rebuild a trial from its event log and re-check every decision.
    Replay {
        /// Event log, or simulator records (one trial per line).
        #[arg(long)]
        log: PathBuf,
        /// Which record to replay when the file holds simulator records.
        #[arg(long, default_value_t = 0)]
        record: usize,
        /// Write the extracted event log here.
        #[arg(long)]
        export: Option<PathBuf>,
    },
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct ReplayReport {
    events: usize,
    state: StateSnapshot,
    mismatches: Vec<Mismatch>,
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

type Res<T> = Result<T, Box<dyn std::error::Error>>;

fn read(path: &PathBuf) -> Res<String> {
    fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()).into())
}

fn run(cli: Cli) -> Res<ExitCode> {
    match cli.cmd {
        Cmd::Sim {
            scenario,
            design,
            reps,
            seed,
            no_acd,
            paper_mcmc,
            compare_acd,
            threads,
            out,
            records,
        } => {
            let scn = ScenarioSpec::from_json(&read(&scenario)?)?;
            let mut d = DesignSpec::from_json(&read(&design)?)?;
            if paper_mcmc {
                d.mcmc = McmcProfile::Paper;
            }
            let settings = d.settings(&scn, !no_acd, seed)?;
            let threads = threads.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
            if compare_acd {
                let cmp = duration_comparison(&scn, &settings, &d.time, reps, seed, threads)?;
                fs::write(&out, serde_json::to_string_pretty(&cmp)?)?;
                println!(
                    "mean duration {:.1} days with division, {:.1} without; mean saving {:.1}; never longer: {}; failed {}",
                    cmp.mean_with_acd, cmp.mean_without_acd, cmp.mean_saving, cmp.acd_never_longer, cmp.failed
                );
                return Ok(ExitCode::SUCCESS);
            }
            let (oc, recs) = run_replicates(&scn, &settings, &d.time, reps, seed, threads)?;
            fs::write(&out, serde_json::to_string_pretty(&oc)?)?;
            if let Some(path) = records {
                let mut f = fs::File::create(path)?;
                for r in &recs {
                    writeln!(f, "{}", serde_json::to_string(r)?)?;
                }
            }
            print!("{}", render_table(&oc));
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Serve { port, data, fast, host } => {
            let addr: SocketAddr = format!("{host}:{port}").parse()?;
            let profile = if fast { McmcProfile::Fast } else { McmcProfile::Paper };
            let rt = tokio::runtime::Runtime::new()?;
            eprintln!("listening on http://{addr} (data in {})", data.display());
            rt.block_on(aaa_service::serve(addr, data, profile))?;
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Calibrate { p_t, q1, q2, u } => {
            let eta = calibrate_eta(&CalibrationSpec {
                p_t,
                q1_star: q1,
                q2_star: q2,
                u_star: u,
            })?;
            println!("{}", serde_json::to_string_pretty(&eta)?);
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Replay { log, record, export } => {
            let text = read(&log)?;
            let events = load_events(&text, record)?;
            if let Some(path) = export {
                fs::write(path, render_log(&events))?;
            }
            let state = TrialState::replay(&events)?;
            let mismatches = verify_log(&events)?;
            let ok = mismatches.is_empty();
            let report = ReplayReport {
                events: events.len(),
                state: StateSnapshot::from(&state),
                mismatches,
            };
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(2) })
        }
    }
}

/// Events from either an event log or a file of simulator records.
fn load_events(text: &str, record: usize) -> Res<Vec<TrialEvent>> {
    let first = text.lines().find(|l| !l.trim().is_empty()).ok_or("empty log")?;
    let probe: serde_json::Value = serde_json::from_str(first)?;
    if probe.get("events").is_some() {
        let line = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .nth(record)
            .ok_or_else(|| format!("no record {record}"))?;
        let rec: TrialRecord = serde_json::from_str(line)?;
        return Ok(rec.events);
    }
    Ok(parse_log(text)?)
}
