use std::path::PathBuf;

use clap::Parser;
use serde::{Deserialize, Serialize};

use qcsync_core::qcs::{error_budget, optimize_rounds};

use super::{load_config, parse_count, parse_count_flag, CliError};
use crate::output::{emit, Cell, Format, Table};

const PS: f64 = 1e-12;

#[derive(Parser)]
pub struct Args {
    /// Initial fidelities F₀, comma-separated.
    #[arg(long, value_delimiter = ',')]
    f0: Option<Vec<f64>>,
    /// Initial pair counts N, comma-separated (scientific notation accepted).
    #[arg(long, value_delimiter = ',', value_parser = parse_count_flag)]
    n_pairs: Option<Vec<f64>>,
    /// Clock timescale 1/ω in picoseconds.
    #[arg(long)]
    inv_omega_ps: Option<f64>,
    /// Largest round count to evaluate.
    #[arg(long)]
    n_max: Option<u32>,
    /// Emit the optimized (n*, δt*) per combination instead of full curves.
    #[arg(long)]
    optimize: bool,
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
    f0: Option<Vec<f64>>,
    n_pairs: Option<Vec<f64>>,
    inv_omega_ps: Option<f64>,
    n_max: Option<u32>,
    optimize: Option<bool>,
    seed: Option<u64>,
}

#[derive(Serialize)]
struct Resolved {
    command: &'static str,
    f0: Vec<f64>,
    n_pairs: Vec<u64>,
    inv_omega_ps: f64,
    n_max: u32,
    optimize: bool,
    seed: u64,
}

pub fn run(args: Args) -> Result<(), CliError> {
    let file: FileParams = load_config(&args.config)?;
    let n_pairs = args
        .n_pairs
        .or(file.n_pairs)
        .unwrap_or_else(|| vec![1e5])
        .into_iter()
        .map(|x| parse_count(x, "n-pairs"))
        .collect::<Result<Vec<u64>, _>>()?;
    let resolved = Resolved {
        command: "budget",
        f0: args.f0.or(file.f0).unwrap_or_else(|| vec![0.9]),
        n_pairs,
        inv_omega_ps: args.inv_omega_ps.or(file.inv_omega_ps).unwrap_or(17.0),
        n_max: args.n_max.or(file.n_max).unwrap_or(20),
        optimize: args.optimize || file.optimize.unwrap_or(false),
        seed: args.seed.or(file.seed).unwrap_or(0),
    };
    if resolved.inv_omega_ps <= 0.0 {
        return Err(CliError::Config("inv-omega-ps must be positive".into()));
    }
    for &f in &resolved.f0 {
        if !(0.0..=1.0).contains(&f) {
            return Err(CliError::Config(format!("f0 must be in [0, 1], got {f}")));
        }
    }
    let omega = 1.0 / (resolved.inv_omega_ps * PS);
    let single = resolved.f0.len() == 1 && resolved.n_pairs.len() == 1;
    let meta = serde_json::to_string(&resolved).expect("serializable");

    let table = if resolved.optimize {
        // Optimized error versus N per F₀.
        let mut t = Table::new(vec!["f0", "n_pairs", "n_star", "f_n_star", "dt_star_ps"]);
        for &f0 in &resolved.f0 {
            for &n in &resolved.n_pairs {
                let opt = optimize_rounds(n, f0, omega, resolved.n_max)?;
                t.push(vec![
                    Cell::F(f0),
                    Cell::U(n),
                    Cell::U(opt.n_star as u64),
                    Cell::F(opt.best.f_n),
                    Cell::F(opt.best.dt_total / PS),
                ]);
            }
        }
        t
    } else {
        // δt(n) curves; single combinations use the fixed six-column schema.
        let columns = if single {
            vec![
                "n",
                "F_n",
                "pairs_remaining",
                "dt_sql_ps",
                "dt_fidelity_ps",
                "dt_total_ps",
            ]
        } else {
            vec![
                "f0",
                "n_pairs",
                "n",
                "F_n",
                "pairs_remaining",
                "dt_sql_ps",
                "dt_fidelity_ps",
                "dt_total_ps",
            ]
        };
        let mut t = Table::new(columns);
        for &f0 in &resolved.f0 {
            for &n_pairs in &resolved.n_pairs {
                for n in 0..=resolved.n_max {
                    if n >= 64 || (1u64 << n) > n_pairs {
                        break;
                    }
                    let b = error_budget(n_pairs, n, f0, omega)?;
                    let mut row = Vec::new();
                    if !single {
                        row.push(Cell::F(f0));
                        row.push(Cell::U(n_pairs));
                    }
                    row.extend([
                        Cell::U(n as u64),
                        Cell::F(b.f_n),
                        Cell::F(b.pairs_used),
                        Cell::F(b.dt_sql / PS),
                        Cell::F(b.dt_fidelity / PS),
                        Cell::F(b.dt_total / PS),
                    ]);
                    t.push(row);
                }
            }
        }
        t
    };

    emit(args.out.as_deref(), &table.render(&meta, args.format))?;
    Ok(())
}
