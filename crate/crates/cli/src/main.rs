use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use solenoid_cli::commands::{self, BrolinArgs, HArgs, SampleArgs};
use solenoid_cli::scenario::Overrides;
use solenoid_cli::CliError;

#[derive(Parser)]
#[command(name = "solenoid", version, about = "Transfer operators, path measures and disintegration checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    global: Global,
}

#[derive(Args)]
struct Global {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Force left-to-right sequential reductions.
    #[arg(long, global = true)]
    deterministic_sum: bool,
    /// Maximum preimage-tree nodes per integral.
    #[arg(long, global = true)]
    budget: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the enabled checks of a scenario and write a JSON report.
    Verify {
        /// Scenario file (TOML, or JSON by extension).
        scenario: PathBuf,
        /// Report path (default: `run.report`, else `<id>.report.json`).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides `run.seed`.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Sample backward paths from P_x0 and write them as CSV.
    SamplePaths {
        scenario: PathBuf,
        /// Start point: `p/q` or a decimal on the circle, `0:1:1` on a subshift, `re,im` for Julia.
        #[arg(long)]
        x0: Option<String>,
        #[arg(long, default_value_t = 10)]
        depth: usize,
        #[arg(long, default_value_t = 100)]
        count: usize,
        /// Overrides `run.seed`; path i draws from stream (seed, i).
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve R h = h by power iteration and write the grid table.
    HFunction {
        scenario: PathBuf,
        /// Grid size (circle, a multiple of the degree) or word length (subshift); overrides `h.grid`.
        #[arg(long)]
        grid: Option<usize>,
        /// Stopping threshold on ‖R h − h‖∞; overrides `h.tol`.
        #[arg(long)]
        tol: Option<f64>,
        /// Overrides `h.max_iters`.
        #[arg(long)]
        max_iters: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sample the Brolin measure of z^2 + c and rasterize it as PGM.
    Brolin {
        /// `re` or `re,im`.
        #[arg(long, allow_hyphen_values = true, default_value = "0")]
        c: String,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        /// Chain states discarded before sampling.
        #[arg(long, default_value_t = 64)]
        burn: usize,
        /// Keep every thin-th chain state.
        #[arg(long, default_value_t = 16)]
        thin: usize,
        /// Independent chains, chain i on stream (seed, i).
        #[arg(long, default_value_t = 1)]
        chains: usize,
        /// Raster width and height in pixels.
        #[arg(long, default_value_t = 512)]
        grid: usize,
        /// Write a 16-bit PGM instead of 8-bit.
        #[arg(long)]
        sixteen_bit: bool,
        /// Also write the sample cloud as CSV.
        #[arg(long)]
        cloud: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write the Perron fixed measure of a subshift scenario as a cylinder table.
    Eigmeasure {
        scenario: PathBuf,
        /// Longest cylinder written (default: the measure depth, else 4).
        #[arg(long)]
        depth: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> Result<bool, CliError> {
    if let Some(n) = cli.global.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("--threads: {e}")))?;
    }
    let ov = |seed| Overrides { seed, budget: cli.global.budget, deterministic_sum: cli.global.deterministic_sum };
    match &cli.command {
        Command::Verify { scenario, out, seed } => commands::cmd_verify(scenario, out.as_deref(), &ov(*seed)),
        Command::SamplePaths { scenario, x0, depth, count, seed, out } => commands::cmd_sample_paths(
            scenario,
            &SampleArgs { x0: x0.as_deref(), depth: *depth, count: *count, out },
            &ov(*seed),
        ),
        Command::HFunction { scenario, grid, tol, max_iters, out } => commands::cmd_h_function(
            scenario,
            &HArgs { grid: *grid, tol: *tol, max_iters: *max_iters, out },
            &ov(None),
        ),
        Command::Brolin { c, samples, burn, thin, chains, grid, sixteen_bit, cloud, seed, out } => {
            commands::cmd_brolin(&BrolinArgs {
                c: commands::parse_complex(c)?,
                samples: *samples,
                burn: *burn,
                thin: *thin,
                chains: *chains,
                grid: *grid,
                sixteen_bit: *sixteen_bit,
                seed: *seed,
                out,
                cloud: *cloud,
            })
        }
        Command::Eigmeasure { scenario, depth, out } => commands::cmd_eigmeasure(scenario, *depth, out, &ov(None)),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
