//! Command-line front end for `xaudit`. [`dispatch`] parses an argument
//! vector, runs one subcommand and returns the process exit code.

mod args;
mod commands;
pub mod report;

use std::ffi::OsString;
use std::mem::take;
use std::path::PathBuf;

use clap::Parser;

use args::{Cli, Command, FileConfig, Merge};
use commands::Output;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] xaudit::Error),
    #[error("{0}")]
    Usage(String),
    #[error("config file {path}: {message}")]
    Config { path: PathBuf, message: String },
    #[error("cannot write {path}: {source}")]
    Output {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("serialization failed: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config { .. } => EXIT_USAGE,
            CliError::Core(
                xaudit::Error::InvalidParameter(_) | xaudit::Error::Inapplicable { .. },
            ) => EXIT_USAGE,
            CliError::Core(e) if e.is_data_error() => EXIT_DATA,
            _ => EXIT_RUNTIME,
        }
    }
}

fn read_config(path: &PathBuf) -> Result<FileConfig, CliError> {
    let err = |message: String| CliError::Config {
        path: path.clone(),
        message,
    };
    let text = std::fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
    toml::from_str(&text).map_err(|e| err(e.to_string()))
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut file = match &cli.config {
        Some(p) => read_config(p)?,
        None => FileConfig::default(),
    };
    let out = Output {
        dir: &cli.out_dir,
        quiet: cli.quiet,
    };
    let pipeline = |p: args::Pipeline, f: &mut FileConfig| args::Pipeline {
        data: p.data.merge(take(&mut f.data)),
        synthetic: p.synthetic.merge(take(&mut f.synthetic)),
        model: p.model.merge(take(&mut f.model)),
        run: p.run.merge(take(&mut f.run)),
    };
    match cli.command {
        Command::Synth { synthetic } => commands::synth(&synthetic.merge(file.synthetic), &out),
        Command::Profile { data, synthetic } => commands::profile(
            &data.merge(file.data),
            &synthetic.merge(file.synthetic),
            &out,
        ),
        Command::Train(p) => commands::train(&pipeline(p, &mut file), &out),
        Command::Explain(p) => commands::explain(&pipeline(p, &mut file), &out),
        Command::CrossExplain { pipeline: p, cross } => {
            let cross = cross.merge(take(&mut file.cross_explain));
            commands::cross(&pipeline(p, &mut file), &cross, &out)
        }
        Command::Sweep { pipeline: p, sweep } => {
            let sweep = sweep.merge(take(&mut file.sweep));
            commands::sweep(&pipeline(p, &mut file), &sweep, &out)
        }
        Command::ProbeMcc { probe } => commands::probe(&probe.merge(file.probe), &out),
        Command::ToyDemo { toy } => commands::toy(&toy.merge(file.toy), &out),
    }
}

/// Runs the command line `argv` (program name first) and returns the exit
/// code: 0 success, 1 usage, 2 bad input data, 3 runtime failure.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            if let CliError::Core(xaudit::Error::RunFailed { source, .. }) = &e {
                eprintln!("  caused by: {source}");
            }
            e.exit_code()
        }
    }
}
