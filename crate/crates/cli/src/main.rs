use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser};
use upsilon_cli::commands::distance_config_from_files;
use upsilon_cli::{run, CliError, Outcome, Subcommand};

#[derive(Parser)]
#[command(name = "upsilon", version, about = "Configuration-space laboratory runner")]
enum Cli {
    /// Draw configurations from a model; prints one configuration JSON per line.
    Sample(Common),
    /// d_Upsilon and an optimal matching between two configurations.
    Distance {
        #[command(flatten)]
        common: Common,
        /// Two configuration JSON files, instead of --config.
        files: Vec<PathBuf>,
    },
    /// Both sides of the Mecke identity for a battery of functionals.
    MeckeCheck(Common),
    /// Laplace functional against its closed form.
    LaplaceCheck(Common),
    /// Tail profile n * mu(count >= n).
    Tightness(Common),
    /// Monte Carlo energy of cylinder functions.
    Energy(Common),
    /// Semigroup estimates T_t(Xi, Lambda).
    Semigroup(Common),
    /// Short-time extrapolation of -2t log T_t(Xi, Lambda).
    Varadhan(Common),
    /// Gaussian upper bound over a battery of event pairs.
    GaussianBound(Common),
    /// Pair ratios and carre du champ of a Lipschitz function.
    Rademacher(Common),
    /// Invariance of the model law under the dynamics.
    Stationarity(Common),
    /// Catalog of built-in functions, models, events and potentials.
    ListBuiltins(Common),
}

#[derive(Args)]
struct Common {
    /// Run configuration (JSON).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Write the CSV here and the result record to PATH.json.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the configured worker count.
    #[arg(long)]
    workers: Option<usize>,
}

fn read(path: &PathBuf) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn config_text(sub: Subcommand, common: &Common, files: &[PathBuf]) -> Result<String, CliError> {
    match (&common.config, files) {
        (Some(path), []) => read(path),
        (None, [a, b]) if sub == Subcommand::Distance => distance_config_from_files(&read(a)?, &read(b)?),
        (Some(_), _) => Err(CliError::schema("give either --config or two configuration files")),
        (None, _) if sub == Subcommand::ListBuiltins => Ok(String::new()),
        (None, _) => Err(CliError::schema("--config is required")),
    }
}

fn emit(outcome: &Outcome, out: Option<&PathBuf>) -> Result<(), CliError> {
    let mut stdout = String::new();
    match out {
        Some(path) => {
            std::fs::write(path, &outcome.csv)?;
            let mut record = path.clone().into_os_string();
            record.push(".json");
            std::fs::write(PathBuf::from(record), outcome.record_json() + "\n")?;
        }
        None if outcome.primary.is_none() => stdout.push_str(&outcome.csv),
        None => {}
    }
    match &outcome.primary {
        Some(p) => stdout.push_str(p),
        None => {
            stdout.push_str(&outcome.verdict_line());
            stdout.push('\n');
        }
    }
    print!("{stdout}");
    Ok(())
}

fn main() -> ExitCode {
    let start = Instant::now();
    let (sub, common, files) = match Cli::parse() {
        Cli::Sample(c) => (Subcommand::Sample, c, Vec::new()),
        Cli::Distance { common, files } => (Subcommand::Distance, common, files),
        Cli::MeckeCheck(c) => (Subcommand::MeckeCheck, c, Vec::new()),
        Cli::LaplaceCheck(c) => (Subcommand::LaplaceCheck, c, Vec::new()),
        Cli::Tightness(c) => (Subcommand::Tightness, c, Vec::new()),
        Cli::Energy(c) => (Subcommand::Energy, c, Vec::new()),
        Cli::Semigroup(c) => (Subcommand::Semigroup, c, Vec::new()),
        Cli::Varadhan(c) => (Subcommand::Varadhan, c, Vec::new()),
        Cli::GaussianBound(c) => (Subcommand::GaussianBound, c, Vec::new()),
        Cli::Rademacher(c) => (Subcommand::Rademacher, c, Vec::new()),
        Cli::Stationarity(c) => (Subcommand::Stationarity, c, Vec::new()),
        Cli::ListBuiltins(c) => (Subcommand::ListBuiltins, c, Vec::new()),
    };
    let result = config_text(sub, &common, &files)
        .and_then(|text| run(sub, &text, common.seed, common.workers))
        .and_then(|outcome| emit(&outcome, common.out.as_ref()).map(|_| outcome.pass()));
    eprintln!("{{\"wall_time_s\":{}}}", start.elapsed().as_secs_f64());
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("{}", e.diagnostic());
            ExitCode::from(1)
        }
    }
}
