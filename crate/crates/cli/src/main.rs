use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand as ClapSubcommand};

use torus_nls::io::{self, RawConfig, Subcommand};
use torus_nls::metric::Family;
use torus_nls::Error;

/// Numerical lab for the cubic NLS on a torus of revolution.
///
/// Every run writes its CSV files and a JSON manifest into
/// `$TORUS_NLS_OUT/<subcommand>-<hash>` (default root: ./torus-nls-out).
#[derive(Parser, Debug)]
#[command(name = "torus-nls", version, arg_required_else_help = true, subcommand_required = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(ClapSubcommand, Debug)]
enum Command {
    /// Airy zeros and the unit-scale model spectrum.
    Oracle {
        /// Number of zeros of Ai and Ai' (at most 10).
        #[arg(long)]
        count: Option<usize>,
        #[command(flatten)]
        source: Source,
    },
    /// Lowest eigenpairs of the discrete operator.
    Eig {
        #[command(flatten)]
        target: Target,
        /// Number of eigenpairs.
        #[arg(long)]
        modes: Option<usize>,
        /// Grid size; defaults to the resolution rule.
        #[arg(long)]
        points: Option<usize>,
        /// Also write the eigenvectors.
        #[arg(long)]
        vectors: bool,
        #[command(flatten)]
        source: Source,
    },
    /// Evolve a multiple of the ground state and record the trace.
    Evolve {
        #[command(flatten)]
        target: Target,
        #[arg(long, allow_hyphen_values = true)]
        amplitude: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        s: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        t_end: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        dt: Option<f64>,
        #[command(flatten)]
        numerics: Numerics,
        #[command(flatten)]
        source: Source,
    },
    /// Measure the frequency modulation of the ground mode.
    Modulation {
        #[command(flatten)]
        target: Target,
        #[arg(long, allow_hyphen_values = true)]
        amplitude: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        t_end: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        dt: Option<f64>,
        #[command(flatten)]
        numerics: Numerics,
        #[command(flatten)]
        source: Source,
    },
    /// Two-data Lipschitz quotient up to t_star.
    Lipschitz {
        #[command(flatten)]
        target: Target,
        #[arg(long, allow_hyphen_values = true)]
        s: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        delta: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        dt: Option<f64>,
        #[command(flatten)]
        numerics: Numerics,
        #[command(flatten)]
        source: Source,
    },
    /// Spectral quantities and fitted exponents over a list of k.
    Sweep {
        #[arg(long)]
        family: Option<Family>,
        /// Comma-separated, strictly increasing.
        #[arg(long, value_delimiter = ',')]
        k_list: Option<Vec<i64>>,
        #[arg(long, allow_hyphen_values = true)]
        s: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        delta: Option<f64>,
        /// Also run the modulation and Lipschitz experiments at every k.
        #[arg(long)]
        dynamics: bool,
        #[command(flatten)]
        numerics: Numerics,
        #[command(flatten)]
        source: Source,
    },
}

#[derive(Args, Debug)]
struct Target {
    /// cusp or smooth.
    #[arg(long)]
    family: Option<Family>,
    #[arg(long, allow_hyphen_values = true)]
    k: Option<i64>,
}

#[derive(Args, Debug)]
struct Numerics {
    /// Retained eigenmodes.
    #[arg(long)]
    modes: Option<usize>,
    /// Recorded samples per trajectory.
    #[arg(long)]
    records: Option<usize>,
    /// Top-mode phase per step as a fraction of pi.
    #[arg(long, allow_hyphen_values = true)]
    phase_fraction: Option<f64>,
}

#[derive(Args, Debug)]
struct Source {
    /// TOML file with parameters; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Re-run exactly the parameters recorded in a manifest.
    #[arg(long, conflicts_with = "config")]
    manifest: Option<PathBuf>,
}

fn flag(on: bool) -> Option<bool> {
    on.then_some(true)
}

impl Command {
    fn split(self) -> (Subcommand, RawConfig, Source) {
        match self {
            Command::Oracle { count, source } => (Subcommand::Oracle, RawConfig { count, ..Default::default() }, source),
            Command::Eig {
                target,
                modes,
                points,
                vectors,
                source,
            } => (
                Subcommand::Eig,
                RawConfig {
                    family: target.family,
                    k: target.k,
                    modes,
                    points,
                    vectors: flag(vectors),
                    ..Default::default()
                },
                source,
            ),
            Command::Evolve {
                target,
                amplitude,
                s,
                t_end,
                dt,
                numerics,
                source,
            } => (
                Subcommand::Evolve,
                RawConfig {
                    amplitude,
                    s,
                    t_end,
                    dt,
                    ..numerics.raw(target)
                },
                source,
            ),
            Command::Modulation {
                target,
                amplitude,
                t_end,
                dt,
                numerics,
                source,
            } => (
                Subcommand::Modulation,
                RawConfig {
                    amplitude,
                    t_end,
                    dt,
                    ..numerics.raw(target)
                },
                source,
            ),
            Command::Lipschitz {
                target,
                s,
                delta,
                dt,
                numerics,
                source,
            } => (
                Subcommand::Lipschitz,
                RawConfig {
                    s,
                    delta,
                    dt,
                    ..numerics.raw(target)
                },
                source,
            ),
            Command::Sweep {
                family,
                k_list,
                s,
                delta,
                dynamics,
                numerics,
                source,
            } => (
                Subcommand::Sweep,
                RawConfig {
                    k_list,
                    s,
                    delta,
                    dynamics: flag(dynamics),
                    ..numerics.raw(Target { family, k: None })
                },
                source,
            ),
        }
    }
}

impl Numerics {
    fn raw(self, target: Target) -> RawConfig {
        RawConfig {
            family: target.family,
            k: target.k,
            modes: self.modes,
            records: self.records,
            phase_fraction: self.phase_fraction,
            ..Default::default()
        }
    }
}

/// Failures caused by the invocation rather than the numerics.
enum Failure {
    Usage(String),
    Run(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::Depletion(_) | Error::DegenerateEpsilon(_) => Failure::Usage(e.to_string()),
            other => Failure::Run(other),
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))
}

fn resolve(sub: Subcommand, flags: RawConfig, source: &Source) -> Result<io::RunConfig, Failure> {
    if let Some(path) = &source.manifest {
        if flags != RawConfig::default() {
            return Err(Failure::Usage("--manifest cannot be combined with parameter flags".into()));
        }
        let manifest = io::parse_manifest(&read(path)?).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
        if manifest.subcommand != sub {
            return Err(Failure::Usage(format!(
                "{} records a {} run; use `torus-nls {}`",
                path.display(),
                manifest.subcommand,
                manifest.subcommand
            )));
        }
        return Ok(manifest.config);
    }
    let file = match &source.config {
        Some(path) => RawConfig::from_toml(&read(path)?).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?,
        None => RawConfig::default(),
    };
    Ok(io::parse_config(sub, &file.overlay(flags))?)
}

fn run(cli: Cli) -> Result<bool, Failure> {
    let (sub, flags, source) = cli.command.split();
    let config = resolve(sub, flags, &source)?;
    let dir = io::run_dir(&io::output_root(), &config)?;
    let start = Instant::now();
    let outcome = io::execute(&config)?;
    let (tables, mut manifest) = outcome.into_manifest(&config, start.elapsed().as_secs_f64());
    io::emit(&dir, &tables, &mut manifest).map_err(Failure::Run)?;
    for (name, ok) in &manifest.audits {
        println!("{} {name}", if *ok { "PASS" } else { "FAIL" });
    }
    for w in &manifest.warnings {
        println!("warning: {w}");
    }
    println!("{}", dir.display());
    Ok(manifest.passed())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Run(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
