use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bisym_core::flow::write_csv;
use bisym_harness::catalog::{bundled_catalog_dir, Side};
use bisym_harness::report::{emit_report, emit_summary, Format, Status, Summary};
use bisym_harness::verify::{find_entry, load_dir, named_functions, run_flow, verify_all, verify_entry};
use bisym_harness::{Mutation, VerifyConfig, CATALOG_ENV};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "bisym", version, about = "Verify bi-symplectic bialgebra catalog entries")]
struct Cli {
    /// Catalog directory (defaults to the bundled catalog).
    #[arg(long, global = true, env = CATALOG_ENV)]
    catalog: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every check on one entry or on the whole catalog.
    Verify {
        #[arg(long, conflicts_with = "all", required_unless_present = "all")]
        entry: Option<String>,
        #[arg(long)]
        all: bool,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Sample points per parameter sample in randomized checks.
        #[arg(long, default_value_t = 20)]
        trials: usize,
        /// Absolute and relative tolerance of randomized checks.
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long, value_enum)]
        mutate: Option<Mutation>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Integrate a Hamiltonian flow and write the trajectory as CSV.
    Flow {
        #[arg(long)]
        entry: String,
        /// Function name, e.g. S1, St2, I1.
        #[arg(long)]
        hamiltonian: String,
        #[arg(long, default_value_t = 1.0)]
        t: f64,
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// List the catalog entries.
    List,
}

fn write_out(out: Option<&Path>, bytes: &[u8]) -> io::Result<()> {
    match out {
        Some(p) => std::fs::write(p, bytes),
        None => io::stdout().write_all(bytes),
    }
}

fn usage(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(2)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let dir = cli.catalog.unwrap_or_else(bundled_catalog_dir);
    match cli.command {
        Command::List => match load_dir(&dir) {
            Err(e) => usage(e),
            Ok((entries, failures)) => {
                for e in &entries {
                    let params: Vec<&str> = e.parameters.iter().map(|p| p.symbol.name()).collect();
                    println!("{:<28} {}  params [{}]", e.id, e.title, params.join(", "));
                }
                for f in &failures {
                    println!("unreadable {}: {}", f.path, f.message);
                }
                ExitCode::SUCCESS
            }
        },
        Command::Verify {
            entry,
            all,
            seed,
            trials,
            tol,
            mutate,
            format,
            out,
        } => {
            let mut cfg = VerifyConfig::default();
            cfg.equiv.seed = seed;
            cfg.equiv.trials = trials;
            cfg.equiv.abs_tol = tol;
            cfg.equiv.rel_tol = tol;
            cfg.mutation = mutate;
            let (bytes, status) = if all {
                match verify_all(&dir, &cfg) {
                    Err(e) => return usage(e),
                    Ok(s) => (emit_summary(&s, format), s.status),
                }
            } else {
                let id = entry.expect("clap enforces --entry or --all");
                match find_entry(&dir, &id) {
                    Err(e) => return usage(e),
                    Ok(None) => return usage(format!("no entry `{id}` in {}", dir.display())),
                    Ok(Some(e)) => {
                        let r = verify_entry(&e, &cfg);
                        let status = r.status;
                        let bytes = match format {
                            Format::Json => emit_report(&r, format),
                            Format::Text => emit_summary(&Summary::from_parts(vec![r], Vec::new()), format),
                        };
                        (bytes, status)
                    }
                }
            };
            if let Err(e) = write_out(out.as_deref(), &bytes) {
                return usage(e);
            }
            if status == Status::Pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Command::Flow {
            entry,
            hamiltonian,
            t,
            dt,
            out,
        } => {
            let e = match find_entry(&dir, &entry) {
                Err(e) => return usage(e),
                Ok(None) => return usage(format!("no entry `{entry}` in {}", dir.display())),
                Ok(Some(e)) => e,
            };
            let side = Side::BOTH
                .into_iter()
                .find(|&s| named_functions(&e, s).iter().any(|(n, _)| *n == hamiltonian));
            let Some(side) = side else {
                return usage(format!("no function `{hamiltonian}` in entry `{entry}`"));
            };
            let traj = match run_flow(&e, side, &hamiltonian, dt, t, bisym_core::expr::DEFAULT_DEN_GUARD) {
                Ok(tr) => tr,
                Err(msg) => {
                    eprintln!("error: {msg}");
                    return ExitCode::from(1);
                }
            };
            let fs: Vec<_> = named_functions(&e, side)
                .into_iter()
                .map(|(n, f)| (n, f.with_parameters(&e.flow_parameters)))
                .collect();
            let file = match File::create(&out) {
                Ok(f) => f,
                Err(err) => return usage(format!("{}: {err}", out.display())),
            };
            match write_csv(file, &traj, &e.side(side).coords, &fs, bisym_core::expr::DEFAULT_DEN_GUARD) {
                Ok(()) => ExitCode::SUCCESS,
                Err(err) => usage(err),
            }
        }
    }
}
