use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use permspread::Error;

mod commands;
mod manifest;

use commands::Output;

#[derive(Parser, Debug)]
#[command(
    name = "permspread",
    version,
    about = "Exact tools for t-intersecting families of permutations"
)]
struct Cli {
    #[command(flatten)]
    global: Global,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// Worker threads for the data-parallel kernels (default: all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Add wall-clock seconds to the output (makes it non-reproducible)
    #[arg(long, global = true, default_value_t = false)]
    timing: bool,

    /// Write a run manifest with the output digest to this path
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Size of A_k, exactly or through the closed-form bounds
    AkSize {
        n: usize,
        t: usize,
        k: usize,
        #[arg(long, conflicts_with = "bounds")]
        exact: bool,
        #[arg(long)]
        bounds: bool,
    },
    /// Tables of the closed-form bounds for one (n, t)
    BoundsReport {
        n: usize,
        t: usize,
        /// Exponent slack, a rational such as 1/7
        #[arg(long, default_value = "1/7")]
        eps: String,
        /// One CSV row per k instead of JSON
        #[arg(long)]
        csv: bool,
    },
    /// Maximum t-intersecting family by clique search
    MaxFamily {
        n: usize,
        t: usize,
        #[arg(long, default_value_t = permspread::search::DEFAULT_NODE_BUDGET)]
        budget: u64,
        /// Also examine every maximum family through the identity
        #[arg(long)]
        all_optima: bool,
    },
    /// Compare the clique optimum with max_k |A_k| for a range of t
    VerifyConjecture {
        n: usize,
        /// Inclusive range MIN..MAX (default 1..n)
        #[arg(long = "t")]
        t_range: Option<String>,
        #[arg(long, default_value_t = permspread::search::DEFAULT_NODE_BUDGET)]
        budget: u64,
    },
    /// Simplify and peel a family into layers
    Peel {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        q: Option<usize>,
        #[arg(long)]
        t: Option<usize>,
    },
    /// Simplify a t-intersecting family to its fixpoint
    Simplify {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        t: Option<usize>,
    },
    /// Check r-spreadness, or (r, t)-spreadness with --t
    SpreadCheck {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        r: String,
        #[arg(long)]
        t: Option<usize>,
        #[arg(long, default_value_t = permspread::spread::DEFAULT_BUDGET)]
        budget: u64,
    },
    /// Carve a family into spread pieces
    SpreadApprox {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        t: usize,
        #[arg(long)]
        q: usize,
        #[arg(long)]
        r: String,
        /// Stop once fewer members than this remain
        #[arg(long, default_value = "1")]
        threshold: String,
        /// Recorded in the output; the approximation itself is deterministic
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Minimize the r-wise intersection inside a uniform layer
    GoodTuple {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        t: usize,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        r: usize,
        /// Scan every r-subset instead of branch-and-bound
        #[arg(long)]
        exhaustive: bool,
    },
    /// Monte-Carlo containment probability against the spread-lemma bound
    SpreadLemma {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        p: String,
        #[arg(long)]
        trials: u64,
        #[arg(long)]
        seed: u64,
        /// Spread parameter the family is known to satisfy
        #[arg(long)]
        r: String,
        #[arg(long, default_value_t = 1)]
        m: u64,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::AkSize { .. } => "ak-size",
            Command::BoundsReport { .. } => "bounds-report",
            Command::MaxFamily { .. } => "max-family",
            Command::VerifyConjecture { .. } => "verify-conjecture",
            Command::Peel { .. } => "peel",
            Command::Simplify { .. } => "simplify",
            Command::SpreadCheck { .. } => "spread-check",
            Command::SpreadApprox { .. } => "spread-approx",
            Command::GoodTuple { .. } => "good-tuple",
            Command::SpreadLemma { .. } => "spread-lemma",
        }
    }

    fn seed(&self) -> Option<u64> {
        match self {
            Command::SpreadApprox { seed, .. } => *seed,
            Command::SpreadLemma { seed, .. } => Some(*seed),
            _ => None,
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Budget(_) => 2,
        Error::Internal(_) => 1,
        _ => 3,
    }
}

fn configure_threads(threads: Option<usize>) {
    #[cfg(feature = "parallel")]
    if let Some(n) = threads {
        // Only fails if a pool already exists, which cannot happen this early.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    #[cfg(not(feature = "parallel"))]
    let _ = threads;
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    configure_threads(cli.global.threads);
    let start = Instant::now();
    let name = cli.command.name();
    let seed = cli.command.seed();
    let output = match commands::run(cli.command) {
        Ok(out) => out,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(exit_code(&e));
        }
    };
    let elapsed = start.elapsed().as_secs_f64();
    let Output { body, incomplete } = output;
    let text = body.render(cli.global.timing.then_some(elapsed));
    let mut stdout = std::io::stdout().lock();
    if stdout.write_all(text.as_bytes()).and_then(|_| stdout.flush()).is_err() {
        return ExitCode::from(1);
    }
    if let Some(path) = &cli.global.manifest {
        let params: Vec<String> = std::env::args().skip(1).collect();
        let m = manifest::RunManifest::new(name, params, seed, elapsed, text.as_bytes());
        if let Err(e) = m.write(path) {
            eprintln!("error: cannot write manifest {}: {e}", path.display());
            return ExitCode::from(1);
        }
    }
    if incomplete {
        eprintln!("warning: search budget exhausted; results are lower bounds");
        return ExitCode::from(2);
    }
    ExitCode::SUCCESS
}
