use clap::{Args, Parser, Subcommand, ValueEnum};
use mobius_lab::experiments::{run, ExperimentConfig, Format, Recipe};
use mobius_lab::Error;
use std::path::PathBuf;
use std::process::ExitCode;

/// Numerical experiments on Mobius averages, orbit complexity and nilsequences.
#[derive(Parser, Debug)]
#[command(name = "mobius-lab", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run whatever recipe the config file names.
    Run(Global),
    /// Segmented sieve of mu on [1, N].
    Sieve(Global),
    /// Two-point logarithmic correlations of mu.
    Chowla(Global),
    /// Twisted averages of mu at a fixed frequency.
    Davenport(Global),
    /// Greedy covering counts across orbit lengths.
    ComplexityProfile(Global),
    /// Covering counts of Heisenberg polynomial orbit strings.
    NilPolyCover(Global),
    /// Coded versus original covering counts for a rotation and an arc.
    CodingTransfer(Global),
    /// Short-interval Fourier uniformity over a frequency set.
    FourierRestricted(Global),
    /// Multi-scale lower-bound chain for a correlated signal.
    ConstructChain(Global),
    /// Finite-N disjointness certificate for a rotation.
    Certificate(Global),
    /// Print the column schema of every output table.
    Schema,
}

#[derive(Args, Debug, Clone)]
struct Global {
    /// TOML config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    /// Recipe parameter override, `key=value` (repeatable).
    #[arg(long = "param", short = 'p', value_name = "KEY=VALUE")]
    params: Vec<String>,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum FormatArg {
    Csv,
    Tsv,
}

fn recipe_of(cmd: &Command) -> Option<Recipe> {
    Some(match cmd {
        Command::Sieve(_) => Recipe::Sieve,
        Command::Chowla(_) => Recipe::Chowla,
        Command::Davenport(_) => Recipe::Davenport,
        Command::ComplexityProfile(_) => Recipe::ComplexityProfile,
        Command::NilPolyCover(_) => Recipe::NilPolyCover,
        Command::CodingTransfer(_) => Recipe::CodingTransfer,
        Command::FourierRestricted(_) => Recipe::FourierRestricted,
        Command::ConstructChain(_) => Recipe::ConstructChain,
        Command::Certificate(_) => Recipe::Certificate,
        Command::Run(_) | Command::Schema => return None,
    })
}

fn build_config(recipe: Option<Recipe>, g: &Global) -> Result<ExperimentConfig, Error> {
    let mut cfg = match (&g.config, recipe) {
        (Some(path), _) => ExperimentConfig::load(path)?,
        (None, Some(r)) => ExperimentConfig::new(r),
        (None, None) => return Err(Error::Usage("`run` needs --config".into())),
    };
    if let Some(r) = recipe {
        if cfg.recipe != r {
            return Err(Error::Usage(format!(
                "config names recipe `{}` but the subcommand is `{}`",
                cfg.recipe.as_str(),
                r.as_str()
            )));
        }
    }
    if let Some(out) = &g.out {
        cfg.out = out.clone();
    }
    if let Some(seed) = g.seed {
        cfg.seed = seed;
    }
    if let Some(t) = g.threads {
        cfg.threads = Some(t);
    }
    if let Some(f) = g.format {
        cfg.format = match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Tsv => Format::Tsv,
        };
    }
    for p in &g.params {
        cfg.set_param(p)?;
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let global = match &cli.command {
        Command::Schema => {
            print!("{}", mobius_lab::experiments::SCHEMA);
            return ExitCode::SUCCESS;
        }
        Command::Run(g)
        | Command::Sieve(g)
        | Command::Chowla(g)
        | Command::Davenport(g)
        | Command::ComplexityProfile(g)
        | Command::NilPolyCover(g)
        | Command::CodingTransfer(g)
        | Command::FourierRestricted(g)
        | Command::ConstructChain(g)
        | Command::Certificate(g) => g,
    };
    let result = build_config(recipe_of(&cli.command), global).and_then(|cfg| run(&cfg).map(|m| (cfg, m)));
    match result {
        Ok((cfg, manifest)) => {
            for o in &manifest.outputs {
                println!("{}  {} rows  {}", o.sha256, o.rows, cfg.out.join(&o.file).display());
            }
            for c in &manifest.checks {
                println!("[{}] {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            if manifest.checks_pass() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(3)
            }
        }
        Err(err @ (Error::Usage(_) | Error::InvalidInput(_) | Error::Parse(_))) => {
            eprintln!("mobius-lab: {err}");
            ExitCode::from(2)
        }
        Err(err) => {
            eprintln!("mobius-lab: {err}");
            ExitCode::from(1)
        }
    }
}
