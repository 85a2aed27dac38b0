use std::path::PathBuf;

use clap::Parser;
use serde::Deserialize;

use qcsync_core::frames::BasisFrame;
use qcsync_core::harness::{run_scenario, DelaySide, RoundPlan, Scenario};
use qcsync_core::purify::EnsembleMode;

use super::{load_config, parse_count, parse_count_flag, CliError};
use crate::output::{emit, Cell, Format, Table};

#[derive(Parser)]
pub struct Args {
    /// Pair budget N (scientific notation accepted).
    #[arg(long, value_parser = parse_count_flag)]
    n_pairs: Option<f64>,
    /// Depolarizing probability of the quantum channel.
    #[arg(long)]
    noise_p: Option<f64>,
    /// Purification rounds: a number, or `auto` for the optimizer.
    #[arg(long)]
    rounds: Option<String>,
    /// analytic or montecarlo.
    #[arg(long)]
    mode: Option<String>,
    /// True clock offset (Bob minus Alice), seconds.
    #[arg(long)]
    clock_offset: Option<f64>,
    /// Qubit transition angular frequency, rad/s.
    #[arg(long)]
    omega: Option<f64>,
    /// Classical-channel latency, seconds.
    #[arg(long)]
    latency: Option<f64>,
    /// Uniform latency jitter bound, seconds.
    #[arg(long)]
    jitter: Option<f64>,
    /// Pre-agreed schedule slot, seconds.
    #[arg(long)]
    round_slot: Option<f64>,
    /// Alice's basis convention as `theta0,theta1`.
    #[arg(long, value_parser = parse_frame, allow_hyphen_values = true)]
    frame_alice: Option<FramePair>,
    /// Bob's basis convention as `theta0,theta1`.
    #[arg(long, value_parser = parse_frame, allow_hyphen_values = true)]
    frame_bob: Option<FramePair>,
    /// Charlie's basis convention as `theta0,theta1`.
    #[arg(long, value_parser = parse_frame, allow_hyphen_values = true)]
    frame_charlie: Option<FramePair>,
    /// Which side carries the delivery delay phase: alice or bob.
    #[arg(long)]
    delay_side: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "json")]
    format: Format,
}

#[derive(Debug, Clone, Copy)]
pub struct FramePair(f64, f64);

fn parse_frame(s: &str) -> Result<FramePair, String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err(format!("expected 'theta0,theta1', got '{s}'"));
    }
    let t0 = parts[0].trim().parse::<f64>().map_err(|e| e.to_string())?;
    let t1 = parts[1].trim().parse::<f64>().map_err(|e| e.to_string())?;
    Ok(FramePair(t0, t1))
}

/// `rounds` in a config file: a number or the string "auto".
#[derive(Deserialize)]
#[serde(untagged)]
enum RoundsSpec {
    Fixed(u32),
    Named(String),
}

#[derive(Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileParams {
    n_pairs: Option<f64>,
    noise_p: Option<f64>,
    rounds: Option<RoundsSpec>,
    mode: Option<String>,
    clock_offset: Option<f64>,
    omega: Option<f64>,
    latency: Option<f64>,
    jitter: Option<f64>,
    round_slot: Option<f64>,
    frame_alice: Option<[f64; 2]>,
    frame_bob: Option<[f64; 2]>,
    frame_charlie: Option<[f64; 2]>,
    delay_side: Option<String>,
    seed: Option<u64>,
}

fn parse_rounds(s: &str) -> Result<RoundPlan, CliError> {
    if s == "auto" {
        Ok(RoundPlan::Auto)
    } else {
        s.parse::<u32>()
            .map(RoundPlan::Fixed)
            .map_err(|_| CliError::Config(format!("rounds must be a number or 'auto', got '{s}'")))
    }
}

pub fn run(args: Args) -> Result<(), CliError> {
    let file: FileParams = load_config(&args.config)?;
    let mut scenario: Scenario<f64> = Scenario::baseline(args.seed.or(file.seed).unwrap_or(0));

    if let Some(n) = args.n_pairs.or(file.n_pairs) {
        scenario.n_pairs = parse_count(n, "n-pairs")?;
    }
    if let Some(p) = args.noise_p.or(file.noise_p) {
        scenario.channel.noise_p = p;
    }
    if let Some(l) = args.latency.or(file.latency) {
        scenario.channel.latency = l;
    }
    if let Some(j) = args.jitter.or(file.jitter) {
        scenario.channel.jitter = j;
    }
    if let Some(s) = args.round_slot.or(file.round_slot) {
        scenario.round_slot = s;
    }
    if let Some(o) = args.clock_offset.or(file.clock_offset) {
        scenario.clock_offset = o;
    }
    if let Some(w) = args.omega.or(file.omega) {
        scenario.omega = w;
    }
    let file_rounds = file.rounds.map(|r| match r {
        RoundsSpec::Fixed(n) => Ok(RoundPlan::Fixed(n)),
        RoundsSpec::Named(s) => parse_rounds(&s),
    });
    if let Some(r) = args.rounds.as_deref().map(parse_rounds).or(file_rounds) {
        scenario.rounds = r?;
    }
    if let Some(m) = args.mode.or(file.mode) {
        scenario.mode = match m.as_str() {
            "analytic" => EnsembleMode::Analytic,
            "montecarlo" => EnsembleMode::MonteCarlo,
            other => return Err(CliError::Config(format!("unknown mode '{other}'"))),
        };
    }
    if let Some(d) = args.delay_side.or(file.delay_side) {
        scenario.delay_side = match d.as_str() {
            "alice" => DelaySide::Alice,
            "bob" => DelaySide::Bob,
            other => return Err(CliError::Config(format!("unknown delay side '{other}'"))),
        };
    }
    let frame = |flag: Option<FramePair>, file: Option<[f64; 2]>| -> Option<BasisFrame<f64>> {
        flag.map(|v| BasisFrame::new(v.0, v.1))
            .or(file.map(|v| BasisFrame::new(v[0], v[1])))
    };
    if let Some(f) = frame(args.frame_alice, file.frame_alice) {
        scenario.frame_alice = f;
    }
    if let Some(f) = frame(args.frame_bob, file.frame_bob) {
        scenario.frame_bob = f;
    }
    if let Some(f) = frame(args.frame_charlie, file.frame_charlie) {
        scenario.frame_charlie = f;
    }

    let report = run_scenario(scenario)?;
    let content = match args.format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&report)
                .map_err(|e| CliError::Internal(e.to_string()))?;
            s.push('\n');
            s
        }
        Format::Csv => {
            // Trajectory rows, with the estimate summarized in the header.
            let mut table = Table::new(vec![
                "round",
                "fidelity",
                "pairs_remaining",
                "success_rate",
            ]);
            for r in &report.trajectory.rounds {
                table.push(vec![
                    Cell::U(r.round as u64),
                    Cell::F(r.fidelity),
                    Cell::F(r.pairs_remaining),
                    Cell::F(r.success_rate),
                ]);
            }
            let meta = serde_json::to_string(&serde_json::json!({
                "command": "e2e",
                "scenario": report.scenario,
                "estimated_offset": report.estimated_offset,
                "true_offset": report.true_offset,
                "dt_total": report.budget.dt_total,
                "branch_ok": report.branch_ok,
            }))
            .map_err(|e| CliError::Internal(e.to_string()))?;
            table.render(&meta, Format::Csv)
        }
    };
    emit(args.out.as_deref(), &content)?;
    Ok(())
}
