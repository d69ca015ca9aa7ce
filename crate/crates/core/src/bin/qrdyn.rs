use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};

use qrdyn::cli_report;
use qrdyn::config::{parse_overrides, ExperimentConfig, Kind};

#[derive(Parser)]
#[command(name = "qrdyn", version, about = "Superattracting fixed points of quasiregular maps: numerical checks")]
struct Cli {
    /// Output directory (overrides `out` in the config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; falls back to QRDYN_WORKERS, then all cores.
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List map families, their parameters and profile constants.
    Catalog,
    /// Run a config file whose `kind` selects the experiment.
    Run {
        config: PathBuf,
        #[arg(trailing_var_arg = true, allow_hyphen_values = true)]
        overrides: Vec<String>,
    },
    #[command(external_subcommand)]
    Kind(Vec<String>),
}

fn workers(flag: Option<usize>) -> anyhow::Result<Option<usize>> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var("QRDYN_WORKERS") {
        Ok(v) => Ok(Some(v.trim().parse().with_context(|| format!("QRDYN_WORKERS='{v}' is not a number"))?)),
        Err(_) => Ok(None),
    }
}

/// `<kind> [--config FILE] [--key value]...`
fn kind_config(args: &[String]) -> qrdyn::Result<ExperimentConfig> {
    let kind: Kind = args[0].parse()?;
    let mut rest: Vec<String> = args[1..].to_vec();
    let mut file = None;
    if let Some(i) = rest.iter().position(|a| a == "--config") {
        let path = rest.get(i + 1).cloned().ok_or_else(|| qrdyn::Error::Config("--config needs a path".into()))?;
        rest.drain(i..i + 2);
        file = Some(PathBuf::from(path));
    }
    let overrides = parse_overrides(&rest)?;
    match file {
        Some(p) => ExperimentConfig::from_file(Some(kind), &p, overrides),
        None => ExperimentConfig::from_params(Some(kind), overrides, std::path::Path::new(".")),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match workers(cli.workers) {
        Ok(Some(n)) if n > 0 => {
            if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
        }
        Ok(_) => {}
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    }
    let cfg = match cli.command {
        Command::Catalog => {
            print!("{}", cli_report::list_catalog());
            return ExitCode::SUCCESS;
        }
        Command::Run { config, overrides } => {
            parse_overrides(&overrides).and_then(|o| ExperimentConfig::from_file(None, &config, o))
        }
        Command::Kind(args) => kind_config(&args),
    };
    let mut cfg = match cfg {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if let Some(out) = cli.out {
        cfg.out = out;
    }
    let result = cli_report::run(&cfg);
    match &result {
        Ok(s) => {
            for c in &s.checks {
                println!("{}", c.render());
            }
            println!("{} ({})", if s.pass { "PASS" } else { "FAIL" }, cfg.out.display());
        }
        Err(e) => eprintln!("error: {e}"),
    }
    ExitCode::from(cli_report::exit_code(&result) as u8)
}

