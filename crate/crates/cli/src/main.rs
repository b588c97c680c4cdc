use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use serde_json::Value;

mod commands;
mod config;
mod output;

use config::{Command, ExperimentConfig};
use output::CliError;

/// Windowed scale-derivative operators and discrete Euler-Lagrange experiments.
///
/// The JSON summary goes to stdout. When an output directory is set (flag,
/// config `output`, or SCALEDEL_OUT_DIR) the summary and any CSV table are
/// also written there as `<command>.json` / `<command>.csv`.
#[derive(Debug, Parser)]
#[command(name = "scaledel", version)]
struct Cli {
    /// Read the whole experiment from a JSON config instead of flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory; overrides the config `output` and SCALEDEL_OUT_DIR.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,

    /// Seed for randomized checks.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Print the effective config as JSON and exit without running.
    #[arg(long, global = true)]
    dump_config: bool,

    #[command(subcommand)]
    command: Option<Command>,
}

/// Keys of `input` that did not survive a parse/serialize round trip.
fn dropped_keys(input: &Value, kept: &Value, path: &str, out: &mut Vec<String>) {
    if let (Value::Object(a), Value::Object(b)) = (input, kept) {
        for (key, value) in a {
            let here = if path.is_empty() {
                key.clone()
            } else {
                format!("{path}.{key}")
            };
            match b.get(key) {
                Some(next) => dropped_keys(value, next, &here, out),
                None if value.is_null() => {}
                None => out.push(here),
            }
        }
    }
}

/// Strict parse: flattened argument groups would otherwise drop unknown keys silently.
fn parse_config(text: &str) -> Result<ExperimentConfig, String> {
    let raw: Value = serde_json::from_str(text).map_err(|e| e.to_string())?;
    let config: ExperimentConfig = serde_json::from_value(raw.clone()).map_err(|e| e.to_string())?;
    let kept = serde_json::to_value(&config).map_err(|e| e.to_string())?;
    let mut unknown = Vec::new();
    dropped_keys(&raw, &kept, "", &mut unknown);
    if unknown.is_empty() {
        Ok(config)
    } else {
        Err(format!("unknown key(s): {}", unknown.join(", ")))
    }
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig, CliError> {
    let mut config = match (&cli.config, &cli.command) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
            parse_config(&text).map_err(|msg| CliError::Config(format!("{}: {msg}", path.display())))?
        }
        (None, Some(command)) => ExperimentConfig {
            command: command.clone(),
            output: None,
            seed: 0,
        },
        (None, None) => return Err(CliError::Config("no command given; see --help".into())),
    };
    if cli.config.is_some() && cli.command.is_some() {
        return Err(CliError::Config(
            "give either --config or a subcommand, not both".into(),
        ));
    }
    if let Some(dir) = &cli.out_dir {
        config.output = Some(dir.clone());
    } else if config.output.is_none() {
        config.output = std::env::var_os("SCALEDEL_OUT_DIR")
            .filter(|v| !v.is_empty())
            .map(PathBuf::from);
    }
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    Ok(config)
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let config = load_config(cli)?;
    if cli.dump_config {
        let text = serde_json::to_string_pretty(&config).expect("config serializes");
        println!("{text}");
        return Ok(());
    }
    let out = commands::run(&config.command, config.seed)?;
    if let Some(dir) = &config.output {
        out.write_to(dir)?;
    }
    print!("{}", out.summary_text());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("scaledel: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
