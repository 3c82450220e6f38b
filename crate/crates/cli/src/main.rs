//! `crossex`: capture tools, synthetic markets, signal reports, training
//! and evaluation.

mod commands;
mod manifest;

use clap::{Args, Parser, Subcommand};
use crossex_core::Error;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "crossex", version, about = "Cross-venue optimal execution lab")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Capture file tools.
    #[command(subcommand)]
    Capture(CaptureCmd),
    /// Synthetic market generation.
    #[command(subcommand)]
    Synth(SynthCmd),
    /// Signal regression reports.
    #[command(subcommand)]
    Signals(SignalsCmd),
    /// Train one PPO agent per configured scope.
    Train(RunArgs),
    /// Compare TWAP and trained agents on the evaluation market.
    Evaluate(RunArgs),
}

#[derive(Subcommand)]
enum CaptureCmd {
    /// Sort, de-duplicate timestamps and fill venue clocks.
    Align { input: PathBuf, output: PathBuf },
    /// Resample a sorted capture onto the 10ms grid as CSV.
    Resample { input: PathBuf, output: PathBuf },
}

#[derive(Subcommand)]
enum SynthCmd {
    /// Write a synthetic capture.
    Gen {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum SignalsCmd {
    /// R² per horizon and bin curves of every feature.
    Report(RunArgs),
}

#[derive(Args, Clone)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides every seed in the config.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.command {
        Command::Capture(CaptureCmd::Align { input, output }) => commands::capture_align(&input, &output),
        Command::Capture(CaptureCmd::Resample { input, output }) => commands::capture_resample(&input, &output),
        Command::Synth(SynthCmd::Gen { run, out }) => commands::synth_gen(&run, &out),
        Command::Signals(SignalsCmd::Report(run)) => commands::signals_report(&run),
        Command::Train(run) => commands::train(&run),
        Command::Evaluate(run) => commands::evaluate(&run),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", error_line(&e));
            ExitCode::from(2)
        }
    }
}

/// One-line JSON description of a failure.
fn error_line(e: &Error) -> String {
    let mut obj = serde_json::json!({ "error": e.kind(), "message": e.to_string() });
    match e {
        Error::ConfigParse { file, field, .. } => {
            obj["file"] = file.clone().into();
            if let Some(f) = field {
                obj["field"] = f.clone().into();
            }
        }
        Error::MissingInput { path, field } => {
            obj["file"] = path.clone().into();
            obj["field"] = field.clone().into();
        }
        Error::Io { path, .. } => obj["file"] = path.clone().into(),
        _ => {}
    }
    obj.to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_errors_carry_file_and_field() {
        let e = Error::ConfigParse {
            file: "a.toml".into(),
            field: Some("ppo.seed".into()),
            message: "bad".into(),
        };
        let v: serde_json::Value = serde_json::from_str(&error_line(&e)).unwrap();
        assert_eq!(v["error"], "ConfigParse");
        assert_eq!(v["file"], "a.toml");
        assert_eq!(v["field"], "ppo.seed");
    }

    #[test]
    fn other_errors_have_kind_and_message_only() {
        let v: serde_json::Value = serde_json::from_str(&error_line(&Error::AllMasked)).unwrap();
        assert_eq!(v.as_object().unwrap().len(), 2);
        assert_eq!(v["message"], "action mask admits no action");
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
