use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use cvpurity_cli::*;
use cvpurity_core::document::CmKind;
use cvpurity_core::{load_cm, Error};

/// Purity of Gaussian optical states from covariance matrices.
#[derive(Parser)]
#[command(name = "cvpurity", version)]
struct Cli {
    /// Worker threads for the oracle and the simulator.
    #[arg(long, global = true, env = THREADS_ENV)]
    threads: Option<usize>,

    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Text)]
    format: OutputFormat,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutputFormat {
    Text,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
#[value(rename_all = "SCREAMING_SNAKE_CASE")]
enum KindArg {
    Quadrature,
    Amplitude,
    TwoModePq,
    XyPair,
}

impl From<KindArg> for CmKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Quadrature => CmKind::Quadrature,
            KindArg::Amplitude => CmKind::Amplitude,
            KindArg::TwoModePq => CmKind::TwoModePq,
            KindArg::XyPair => CmKind::XyPair,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Purity of a CM document, using the law that belongs to its kind.
    Purity { cm_file: PathBuf },
    /// Wigner parameters (a, b, c) recovered from a CM document.
    Reconstruct { cm_file: PathBuf },
    /// Re-express a CM document in another basis.
    Convert {
        cm_file: PathBuf,
        #[arg(long, value_enum)]
        to: KindArg,
        /// Output file; stdout if omitted.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Sample a spectrum configuration and estimate its CMs.
    Simulate {
        config: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// Overrides the seed in the configuration.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Compare the determinant law with a numerical purity integral.
    Verify {
        /// "a,b,c" or a CM document.
        input: String,
        /// Treat "a,b,c" as the parameters of a (Ω, -Ω) pair.
        #[arg(long)]
        two_mode: bool,
        /// Grid points per axis (odd).
        #[arg(long)]
        grid: Option<usize>,
        /// Integration half-width in standard deviations.
        #[arg(long)]
        half_width: Option<f64>,
        /// Monte Carlo with this many samples instead of a grid.
        #[arg(long)]
        mc: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Allowed |closed form - oracle| (default 1e-6 single, 1e-3 pair).
        #[arg(long)]
        tolerance: Option<f64>,
        /// Largest grid, in total nodes, that may be evaluated.
        #[arg(long)]
        budget: Option<u128>,
        /// Sum partial results in a fixed order.
        #[arg(long)]
        deterministic: bool,
    },
}

fn fail(err: &Error) -> ExitCode {
    eprintln!("error: {err}");
    if let Some(h) = hint(err) {
        eprintln!("hint: {h}");
    }
    ExitCode::from(exit_code(err))
}

fn run(cli: Cli) -> Result<(String, u8), Error> {
    let format = match cli.format {
        OutputFormat::Text => Format::Text,
        OutputFormat::Json => Format::Json,
    };
    Ok(match cli.command {
        Command::Purity { cm_file } => (format.render(&cmd_purity(&load_cm(cm_file)?)?), EXIT_OK),
        Command::Reconstruct { cm_file } => (format.render(&cmd_reconstruct(&load_cm(cm_file)?)?), EXIT_OK),
        Command::Convert { cm_file, to, output } => {
            let doc = cmd_convert(&load_cm(cm_file)?, to.into())?;
            match output {
                Some(path) => {
                    fs::write(&path, doc.to_json())?;
                    (String::new(), EXIT_OK)
                }
                None => (doc.to_json(), EXIT_OK),
            }
        }
        Command::Simulate { config, output, seed } => (format.render(&cmd_simulate(&config, &output, seed)?), EXIT_OK),
        Command::Verify { input, two_mode, grid, half_width, mc, seed, tolerance, budget, deterministic } => {
            let opts = VerifyOptions {
                points_per_axis: grid,
                half_width_sigmas: half_width,
                mc_samples: mc,
                seed,
                tolerance,
                budget,
                deterministic,
            };
            let report = cmd_verify(&VerifyInput::parse(&input, two_mode)?, &opts)?;
            let code = if report.passed { EXIT_OK } else { EXIT_VERIFY_FAIL };
            (format.render(&report), code)
        }
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("warning: could not size the thread pool: {e}");
        }
    }
    match run(cli) {
        Ok((out, code)) => {
            print!("{out}");
            ExitCode::from(code)
        }
        Err(e) => fail(&e),
    }
}
