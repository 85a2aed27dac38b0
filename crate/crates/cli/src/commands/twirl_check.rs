use std::path::PathBuf;

use clap::Parser;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use qcsync_core::channels::{
    depolarized_phase_singlet, singlet_fidelity_closed_form, twirl, twirled_weights_closed_form,
};
use qcsync_core::frames::phase_singlet;

use super::{load_config, CliError};
use crate::output::{emit, Cell, Format, Table};

#[derive(Parser)]
pub struct Args {
    /// Grid resolution per axis over (p, φ) in \[0,1\] x \[0,2π).
    #[arg(long)]
    grid: Option<usize>,
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
    grid: Option<usize>,
    seed: Option<u64>,
}

#[derive(Serialize)]
struct Resolved {
    command: &'static str,
    grid: usize,
    seed: u64,
}

pub fn run(args: Args) -> Result<(), CliError> {
    let file: FileParams = load_config(&args.config)?;
    let resolved = Resolved {
        command: "twirl-check",
        grid: args.grid.or(file.grid).unwrap_or(20),
        seed: args.seed.or(file.seed).unwrap_or(0),
    };
    if resolved.grid < 2 {
        return Err(CliError::Config("grid must be at least 2".into()));
    }

    let n = resolved.grid;
    let points: Vec<(f64, f64)> = (0..n)
        .flat_map(|i| {
            (0..n).map(move |j| {
                (
                    i as f64 / (n - 1) as f64,
                    2.0 * std::f64::consts::PI * j as f64 / n as f64,
                )
            })
        })
        .collect();
    let rows: Vec<Vec<Cell>> = points
        .par_iter()
        .map(|&(p, phi)| {
            let rho = depolarized_phase_singlet(p, phi).map_err(|e| e.to_string())?;
            let numeric = twirl(&rho).map_err(|e| e.to_string())?;
            let closed = twirled_weights_closed_form(p, phi);
            let weight_residual = numeric
                .weights()
                .into_iter()
                .zip(closed.weights())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0f64, f64::max);
            let direct = rho
                .fidelity(&phase_singlet(0.0))
                .map_err(|e| e.to_string())?;
            let fidelity_residual = (direct - singlet_fidelity_closed_form(p, phi)).abs();
            Ok(vec![
                Cell::F(p),
                Cell::F(phi),
                Cell::F(weight_residual),
                Cell::F(fidelity_residual),
            ])
        })
        .collect::<Result<_, String>>()
        .map_err(CliError::Internal)?;

    let mut table = Table::new(vec!["p", "phi", "weight_residual_max", "fidelity_residual"]);
    for row in rows {
        table.push(row);
    }
    let meta = serde_json::to_string(&resolved).expect("serializable");
    emit(args.out.as_deref(), &table.render(&meta, args.format))?;
    Ok(())
}
