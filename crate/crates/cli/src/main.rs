use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use wgfb_cli::{parse_config, preset, CliError, Outcome, PRESETS};

/// Two-photon scattering off an emitter in front of a mirror.
#[derive(Debug, Parser)]
#[command(name = "wgfb", version)]
struct Args {
    /// JSON run configuration.
    #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
    config: Option<PathBuf>,

    /// Built-in parameter set.
    #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(PRESETS))]
    preset: Option<String>,

    /// Output directory, overriding `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Accepted for compatibility; runs never use random seeds.
    #[arg(long)]
    seedless: bool,
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let config = match (&args.config, &args.preset) {
        (Some(path), _) => std::fs::read(path)
            .map_err(|source| CliError::Io { path: path.clone(), source })
            .and_then(|bytes| parse_config(&bytes)),
        (None, Some(name)) => Ok(preset(name).expect("clap restricts preset names")),
        (None, None) => unreachable!("clap requires one of --config and --preset"),
    };
    let result = config.and_then(|c| wgfb_cli::run(&c, args.out.as_deref()));
    match result {
        Ok(Outcome::Passed) => ExitCode::SUCCESS,
        Ok(Outcome::ValidationFailed) => {
            eprintln!("wgfb: some comparisons failed; see report.jsonl");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("wgfb: {e}");
            ExitCode::from(1)
        }
    }
}
