//! `latfb` — run precoder-feedback experiments, design all-pass filters
//! from unitary samples, verify feedback transcripts, and summarize
//! persisted results.
//!
//! Exit codes: 0 success, 2 configuration/input error, 3 numerical
//! failure.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use latfb_core::error::Error;
use latfb_core::harness::{report, run_simulation, SimConfig};
use latfb_core::serial::{read_nodes, write_lattice_params};
use latfb_core::snip::{snip_design, SnipOptions};

#[derive(Parser)]
#[command(name = "latfb", version, about = "Matrix all-pass lattice precoder feedback experiments")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the Monte-Carlo experiment grid described by a TOML config and
    /// persist CSV results plus feedback transcripts.
    Simulate {
        /// Experiment configuration (TOML).
        #[arg(long)]
        config: PathBuf,
        /// Master seed; cells derive their own streams from it.
        #[arg(long)]
        seed: u64,
        /// Output directory for rates.csv, kappa.csv, flag_profile.csv,
        /// and transcripts/.
        #[arg(long)]
        out: PathBuf,
        /// Switch to the published 4096-subcarrier profile (pilots and
        /// lattice order follow the simulation-parameter table for
        /// m in {4, 8, 12, 15}).
        #[arg(long)]
        full_scale: bool,
    },
    /// Fit a lattice all-pass filter through a set of unitary frequency
    /// samples and write the parameter record.
    Design {
        /// Node file (`nodes v1` format).
        #[arg(long)]
        nodes: PathBuf,
        /// Filter order: number of tracked matrices (reflections + residue).
        #[arg(long)]
        order: usize,
        /// Output parameter record (`latticeparams v1` format).
        #[arg(long)]
        out: PathBuf,
        /// Node residual target.
        #[arg(long, default_value_t = latfb_core::snip::DEFAULT_TOL)]
        tol: f64,
    },
    /// Replay a feedback transcript and verify the decoder lands
    /// bit-exactly on the recorded final state.
    Track {
        #[arg(long)]
        transcript: PathBuf,
    },
    /// Aggregate persisted rates into summary.csv with 95% intervals
    /// over seeds.
    Report {
        /// Directory containing rates.csv.
        #[arg(long = "in")]
        in_dir: PathBuf,
        /// Directory for summary.csv.
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidInput(_) | Error::Parse(_) | Error::Io(_) => 2,
        _ => 3,
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.cmd {
        Cmd::Simulate { config, seed, out, full_scale } => {
            let text = fs::read_to_string(&config)?;
            let mut cfg = SimConfig::from_toml(&text)?;
            if full_scale {
                cfg.apply_full_scale();
                cfg.validate()?;
            }
            let result = run_simulation(&cfg, seed)?;
            report::write_outputs(&result, &out)?;
            println!(
                "wrote {} rate rows, {} kappa rows, {} transcripts to {}",
                result.rates.len(),
                result.kappa.len(),
                result.transcripts.len(),
                out.display()
            );
            Ok(())
        }
        Cmd::Design { nodes, order, out, tol } => {
            let file = fs::File::open(&nodes)?;
            let node_set = read_nodes(std::io::BufReader::new(file))?;
            let opts = SnipOptions { tol, ..Default::default() };
            let design = snip_design(&node_set, order, &opts)?;
            let mut buf = Vec::new();
            write_lattice_params(&mut buf, &design.params)?;
            fs::write(&out, buf)?;
            println!(
                "designed order-{order} filter: residual {:.3e} in {} iterations -> {}",
                design.residual,
                design.iterations,
                out.display()
            );
            Ok(())
        }
        Cmd::Track { transcript } => {
            let file = fs::File::open(&transcript)?;
            let t = latfb_core::feedback::read_transcript(std::io::BufReader::new(file))?;
            t.replay()?;
            println!(
                "transcript OK: scheme {}, {} trackers, {} frames, {} bits/frame",
                t.scheme,
                t.trackers.len(),
                t.frames.len(),
                t.bits_per_frame()
            );
            Ok(())
        }
        Cmd::Report { in_dir, out } => report::report(&in_dir, &out),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_by_error_class() {
        assert_eq!(exit_code(&Error::InvalidInput("x".into())), 2);
        assert_eq!(exit_code(&Error::Parse("x".into())), 2);
        assert_eq!(exit_code(&Error::DesignNotConverged { residual: 1.0, tol: 0.1 }), 3);
        assert_eq!(exit_code(&Error::NumericalInstability("x".into())), 3);
    }
}
