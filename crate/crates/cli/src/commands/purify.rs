use std::path::PathBuf;

use clap::Parser;
use serde::{Deserialize, Serialize};

use qcsync_core::channels::werner_from_fidelity;
use qcsync_core::frames::BasisFrame;
use qcsync_core::purify::{
    purify_schedule, PairEnsemble, PurificationTrajectory, ScheduleParams, YieldConvention,
};

use super::{load_config, parse_count, parse_count_flag, CliError};
use crate::output::{emit, Cell, Format, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum Mode {
    Analytic,
    Montecarlo,
    Both,
}

impl std::str::FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "analytic" => Ok(Mode::Analytic),
            "montecarlo" => Ok(Mode::Montecarlo),
            "both" => Ok(Mode::Both),
            other => Err(format!("unknown mode '{other}'")),
        }
    }
}

#[derive(Parser)]
pub struct Args {
    /// Initial Werner fidelity F₀.
    #[arg(long)]
    f0: Option<f64>,
    /// Initial pair count (scientific notation accepted).
    #[arg(long, value_parser = parse_count_flag)]
    n_pairs: Option<f64>,
    /// Purification rounds.
    #[arg(long)]
    rounds: Option<u32>,
    /// analytic, montecarlo or both.
    #[arg(long)]
    mode: Option<Mode>,
    /// Pair accounting: ideal (halve per round) or realistic (scale by the
    /// success probability too).
    #[arg(long = "yield")]
    yield_convention: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "csv")]
    format: Format,
}

#[derive(Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileParams {
    f0: Option<f64>,
    n_pairs: Option<f64>,
    rounds: Option<u32>,
    mode: Option<Mode>,
    #[serde(rename = "yield")]
    yield_convention: Option<String>,
    seed: Option<u64>,
}

#[derive(Serialize)]
struct Resolved {
    command: &'static str,
    f0: f64,
    n_pairs: u64,
    rounds: u32,
    mode: Mode,
    #[serde(rename = "yield")]
    yield_convention: &'static str,
    seed: u64,
}

pub fn run(args: Args) -> Result<(), CliError> {
    let file: FileParams = load_config(&args.config)?;
    let yield_raw = args
        .yield_convention
        .or(file.yield_convention)
        .unwrap_or_else(|| "ideal".into());
    let yields = match yield_raw.as_str() {
        "ideal" => YieldConvention::Ideal,
        "realistic" => YieldConvention::Realistic,
        other => return Err(CliError::Config(format!("unknown yield '{other}'"))),
    };
    let resolved = Resolved {
        command: "purify",
        f0: args.f0.or(file.f0).unwrap_or(0.9),
        n_pairs: parse_count(args.n_pairs.or(file.n_pairs).unwrap_or(1024.0), "n-pairs")?,
        rounds: args.rounds.or(file.rounds).unwrap_or(3),
        mode: args.mode.or(file.mode).unwrap_or(Mode::Analytic),
        yield_convention: match yields {
            YieldConvention::Ideal => "ideal",
            YieldConvention::Realistic => "realistic",
        },
        seed: args.seed.or(file.seed).unwrap_or(0),
    };
    if !(0.0..=1.0).contains(&resolved.f0) {
        return Err(CliError::Config(format!(
            "f0 must be in [0, 1], got {}",
            resolved.f0
        )));
    }

    let mut table = Table::new(vec![
        "mode",
        "round",
        "fidelity",
        "pairs_remaining",
        "success_rate",
    ]);
    let mut push_trajectory = |label: &str, t: &PurificationTrajectory<f64>| {
        for r in &t.rounds {
            table.push(vec![
                Cell::S(label.into()),
                Cell::U(r.round as u64),
                Cell::F(r.fidelity),
                Cell::F(r.pairs_remaining),
                Cell::F(r.success_rate),
            ]);
        }
    };

    let params = ScheduleParams {
        rounds: resolved.rounds,
        yield_convention: yields,
        frame_a: BasisFrame::reference(),
        frame_b: BasisFrame::reference(),
        master_seed: resolved.seed,
    };
    if matches!(resolved.mode, Mode::Analytic | Mode::Both) {
        let ensemble = PairEnsemble::analytic(resolved.f0, resolved.n_pairs as f64)?;
        let trajectory = purify_schedule(&ensemble, &params)?;
        push_trajectory("analytic", &trajectory);
    }
    if matches!(resolved.mode, Mode::Montecarlo | Mode::Both) {
        if resolved.n_pairs > (1 << 16) {
            return Err(CliError::Config(format!(
                "montecarlo mode caps n-pairs at {}",
                1u64 << 16
            )));
        }
        let werner = werner_from_fidelity(resolved.f0).map_err(|e| CliError::Config(e.to_string()))?;
        let ensemble = PairEnsemble::monte_carlo(vec![werner; resolved.n_pairs as usize])?;
        let trajectory = purify_schedule(&ensemble, &params)?;
        push_trajectory("montecarlo", &trajectory);
    }

    let meta = serde_json::to_string(&resolved).expect("serializable");
    emit(args.out.as_deref(), &table.render(&meta, args.format))?;
    Ok(())
}
