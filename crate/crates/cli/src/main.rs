use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use pspin_cli::commands::{self, Context};
use pspin_cli::config::{ExperimentConfig, Generator};
use pspin_cli::output::OutputOptions;
use pspin_cli::{CliError, Verdict};
use pspin_core::exec;

#[derive(Debug, Parser)]
#[command(name = "pspin", version, about = "Corner ascent experiments for mixed p-spin glasses")]
struct Cli {
    /// Experiment configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the configured output directory.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Omit the `generated_at` field so reruns are byte-identical.
    #[arg(long, global = true)]
    no_timestamp: bool,
    /// Worker threads; 1 runs everything serially.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Eigenvector ascent on the cube from the configured starts.
    Ascend,
    /// Face-aligned ascent on a polytope until an ε-corner.
    AscendPolytope,
    /// Restricted-Hessian GOE statistics, tail frequencies and semicircle fit.
    ValidateGoe,
    /// Empirical covariance of the Hamiltonian against xi.
    ValidateCovariance,
    /// Estimate the derivative bound C.
    EstimateC,
    /// Sampled (eps, delta)-goodness check at one point.
    CheckGoodness,
    /// Write a generated polytope as JSON.
    GenPolytope(GenArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Kind {
    Cube,
    Simplex,
    ProductOfSimplices,
    CrossPolytope,
}

#[derive(Debug, clap::Args)]
struct GenArgs {
    /// Generator; the config's `polytope.generator` is used when omitted.
    #[arg(long, value_enum)]
    kind: Option<Kind>,
    /// Dimension for cube, simplex and cross-polytope.
    #[arg(long)]
    n: Option<usize>,
    /// Number of simplex blocks.
    #[arg(long)]
    k: Option<usize>,
    /// Dimension of each simplex block.
    #[arg(long)]
    d: Option<usize>,
    /// Output file; defaults to `polytope.json` in the output directory.
    #[arg(long)]
    output: Option<PathBuf>,
}

fn generator(args: &GenArgs, config: Option<&ExperimentConfig>) -> Result<Generator, CliError> {
    let need = |v: Option<usize>, name: &str| {
        v.ok_or_else(|| CliError::Config(format!("--{name} is required for this generator")))
    };
    match args.kind {
        Some(Kind::Cube) => Ok(Generator::Cube { n: need(args.n, "n")? }),
        Some(Kind::Simplex) => Ok(Generator::Simplex { n: need(args.n, "n")? }),
        Some(Kind::CrossPolytope) => Ok(Generator::CrossPolytope { n: need(args.n, "n")? }),
        Some(Kind::ProductOfSimplices) => Ok(Generator::ProductOfSimplices {
            k: need(args.k, "k")?,
            d: need(args.d, "d")?,
        }),
        None => config
            .and_then(|c| c.polytope.as_ref())
            .and_then(|p| p.generator.clone())
            .ok_or_else(|| CliError::Config("give --kind or a config with polytope.generator".into())),
    }
}

fn run(cli: Cli) -> Result<Verdict, CliError> {
    let config = cli.config.as_deref().map(ExperimentConfig::load).transpose()?;
    let out_dir = cli
        .out_dir
        .clone()
        .or_else(|| config.as_ref().and_then(|c| c.out_dir.clone()))
        .unwrap_or_else(|| PathBuf::from("pspin-out"));
    let out = OutputOptions { dir: out_dir, timestamp: !cli.no_timestamp };

    if let Command::GenPolytope(args) = &cli.command {
        let g = generator(args, config.as_ref())?;
        let path = args.output.clone().unwrap_or_else(|| out.path("polytope.json"));
        let p = commands::gen_polytope(&g, &path)?;
        println!("gen-polytope: wrote {} (n = {}, {} constraints)", path.display(), p.n(), p.m());
        return Ok(Verdict::Pass);
    }

    let config = config.ok_or_else(|| CliError::Config("--config is required".into()))?;
    let seed = cli.seed.unwrap_or(config.seed);
    let ctx = Context { config, seed, out };
    let (name, verdict) = match cli.command {
        Command::Ascend => ("ascend", commands::ascend(&ctx)?),
        Command::AscendPolytope => ("ascend-polytope", commands::ascend_polytope(&ctx)?),
        Command::ValidateGoe => ("validate-goe", commands::validate_goe(&ctx)?),
        Command::ValidateCovariance => ("validate-covariance", commands::validate_covariance(&ctx)?),
        Command::EstimateC => ("estimate-c", commands::estimate_c(&ctx)?),
        Command::CheckGoodness => ("check-goodness", commands::check_goodness(&ctx)?),
        Command::GenPolytope(_) => unreachable!("handled above"),
    };
    println!("{name}: {} (outputs in {})", verdict.as_str(), ctx.out.dir.display());
    Ok(verdict)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.threads {
        Some(t) => exec::with_threads(t, || run(cli)),
        None => run(cli),
    };
    match result {
        Ok(Verdict::Pass) => ExitCode::SUCCESS,
        Ok(Verdict::Fail) => ExitCode::from(1),
        Err(e) => {
            eprintln!("pspin: {e}");
            ExitCode::from(2)
        }
    }
}
