use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::process::ExitCode;

use clap::Parser;
use expcoding_cli::{run, Cli, CliError, RunConfig};

fn execute(cli: Cli) -> Result<(), CliError> {
    let config = RunConfig::from_cli(cli)?;
    let mut out: Box<dyn Write> = match &config.out {
        Some(path) => Box::new(BufWriter::new(File::create(path).map_err(|e| {
            CliError::Config(format!("cannot open {path} for writing: {e}"))
        })?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    let result = run(&config, &mut out, &mut io::stderr());
    out.flush()?;
    result
}

fn main() -> ExitCode {
    // clap exits with 2 on usage errors and 0 for --help
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
