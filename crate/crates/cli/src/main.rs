//! `djtransmon`: flux sweeps, dispersive shifts, scan analysis and fits from
//! the command line. Exit codes: 0 success, 2 configuration or input error,
//! 3 numeric failure.

// Negated comparisons reject NaN together with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "djtransmon", version, about = "Double-junction transmon spectra, dispersive shifts and fits")]
struct Cli {
    /// Worker threads for flux grids; defaults to the available cores.
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Device parameter JSON.
    #[arg(long)]
    pub params: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Charge cutoff per mode.
    #[arg(long)]
    pub nc: Option<usize>,
    /// Resonator Fock cutoff.
    #[arg(long)]
    pub nf: Option<usize>,
}

#[derive(Args, Debug, Clone)]
pub struct FluxArgs {
    /// Flux grid in Φ₀: START STOP COUNT.
    #[arg(long, num_args = 3, value_names = ["START", "STOP", "COUNT"], allow_negative_numbers = true)]
    pub flux: Vec<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Transition frequencies over a flux grid, one CSV per model.
    Spectrum {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        flux: FluxArgs,
        /// two-mode, two-mode-resonator, bo, reduced; repeat or comma-separate.
        #[arg(long, value_delimiter = ',', default_value = "two-mode")]
        model: Vec<String>,
    },
    /// Dispersive shifts χ_q, χ_int and χ₀ over a flux grid.
    Chi {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        flux: FluxArgs,
        /// Smallest qubit-resonator detuning treated as dispersive, GHz.
        #[arg(long)]
        delta_min: Option<f64>,
    },
    /// Transition table from a two-tone scan.
    Analyze {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        scan: PathBuf,
        #[arg(long = "extract-config")]
        extract_config: PathBuf,
    },
    /// Parameter fit and model comparison against a transition table.
    Fit {
        #[command(flatten)]
        common: Common,
        /// Transition table CSV.
        #[arg(long)]
        table: PathBuf,
        #[arg(long = "fit-spec")]
        fit_spec: PathBuf,
    },
    /// Harmonic content, fitted to four lines or read off the flux potentials.
    Harmonics {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        flux: FluxArgs,
        /// f01, f02/2, f03/3, f04/4 in GHz (fit mode).
        #[arg(long, num_args = 4, value_names = ["F01", "F02_2", "F03_3", "F04_4"])]
        lines: Vec<f64>,
        /// Charging energy for fit mode, GHz.
        #[arg(long)]
        ec: Option<f64>,
        /// Fit E_C as well, starting from --ec; needs fewer harmonics than lines.
        #[arg(long)]
        free_ec: bool,
        /// Number of harmonics.
        #[arg(long, default_value_t = 4)]
        harmonics: usize,
        /// Potential mode: bo (default with --params) or reduced.
        #[arg(long)]
        model: Option<String>,
        /// Potential mode with a fixed asymmetry λ instead of device parameters.
        #[arg(long)]
        lambda: Option<f64>,
    },
    /// Print the version.
    Version,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.workers {
        if n == 0 {
            eprintln!("error: --workers must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot configure workers: {e}");
            return ExitCode::from(2);
        }
    }
    let target = match &cli.command {
        Command::Spectrum { common, .. } => Some(("spectrum", common.out.clone())),
        Command::Chi { common, .. } => Some(("chi", common.out.clone())),
        Command::Analyze { common, .. } => Some(("analyze", common.out.clone())),
        Command::Fit { common, .. } => Some(("fit", common.out.clone())),
        Command::Harmonics { common, .. } => Some(("harmonics", common.out.clone())),
        Command::Version => None,
    };
    let result = match cli.command {
        Command::Spectrum { common, flux, model } => commands::spectrum(&common, &flux, &model),
        Command::Chi { common, flux, delta_min } => commands::chi(&common, &flux, delta_min),
        Command::Analyze { common, scan, extract_config } => commands::analyze(&common, &scan, &extract_config),
        Command::Fit { common, table, fit_spec } => commands::fit(&common, &table, &fit_spec),
        Command::Harmonics { common, flux, lines, ec, free_ec, harmonics, model, lambda } => {
            commands::harmonics(&common, &flux, &commands::HarmonicsArgs { lines, ec, free_ec, harmonics, model, lambda })
        }
        Command::Version => {
            println!("djtransmon {}", env!("CARGO_PKG_VERSION"));
            Ok(())
        }
    };
    match result {
        Ok(()) => {
            if let Some((name, dir)) = &target {
                output::clear_failed(dir, name);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            if let Some((name, dir)) = &target {
                output::mark_failed(dir, name, &e);
            }
            ExitCode::from(if e.is_input_error() { 2 } else { 3 })
        }
    }
}
