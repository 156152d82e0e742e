//! `openapprox`: batch front end for greedy open-set decompositions.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use commands::Failure;

#[derive(Parser, Debug)]
#[command(name = "openapprox", version, about = "Greedy open-set indicator decompositions, audited")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, serde::Serialize)]
pub struct Global {
    /// Write the JSON report here instead of stdout.
    #[arg(long, global = true, value_name = "PATH")]
    pub out_json: Option<PathBuf>,
    /// Write the CSV table here.
    #[arg(long, global = true, value_name = "PATH")]
    pub out_csv: Option<PathBuf>,
    /// Levels whose masks are exported as PGM images (2D grids), e.g. `1,2,5`.
    #[arg(long, global = true, value_delimiter = ',', value_name = "LEVELS")]
    pub masks: Vec<usize>,
    /// Directory for the mask_L<n>.pgm files.
    #[arg(long, global = true, value_name = "DIR", default_value = ".")]
    pub mask_dir: PathBuf,
    /// Worker threads; output does not depend on this.
    #[serde(skip)]
    #[arg(long, global = true, value_name = "K")]
    pub workers: Option<usize>,
    /// Seed for randomized checks.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Decompose f over a sampled domain and verify every invariant.
    Decompose(commands::FnArgs),
    /// Exact level sets of the scalar recursion and their openness.
    Audit(commands::AuditArgs),
    /// Greedy vs dyadic sup-error curves.
    Compare(commands::CompareArgs),
    /// Smooth bump minorants inside the open cores.
    Smooth(commands::FnArgs),
    /// Check that a coefficient sequence is admissible.
    ValidateSeq(commands::ValidateArgs),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let start = Instant::now();
    let pool = match rayon::ThreadPoolBuilder::new()
        .num_threads(cli.global.workers.unwrap_or(0))
        .build()
    {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker pool: {e}");
            return ExitCode::from(2);
        }
    };
    let workers = pool.current_num_threads();
    let g = &cli.global;
    let result = pool.install(|| match &cli.command {
        Command::Decompose(a) => commands::decompose(g, a),
        Command::Audit(a) => commands::audit(g, a),
        Command::Compare(a) => commands::compare(g, a),
        Command::Smooth(a) => commands::smooth(g, a),
        Command::ValidateSeq(a) => commands::validate_seq(g, a),
    });
    // Timing and scheduling go to stderr so artifacts stay byte-identical.
    eprintln!(
        "{}",
        serde_json::json!({"wall_time_s": start.elapsed().as_secs_f64(), "workers": workers})
    );
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure { code, message }) => {
            eprintln!("error: {message}");
            ExitCode::from(code)
        }
    }
}
