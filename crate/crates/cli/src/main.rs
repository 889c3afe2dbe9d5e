use std::io::{self, Write};
use std::process::ExitCode;

use clap::Parser;
use forestconc_cli::{run, Cli, Sinks};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (stdout, stderr) = (io::stdout(), io::stderr());
    let (mut out, mut err) = (stdout.lock(), stderr.lock());
    let result = run(&cli, &mut Sinks { stdout: &mut out, stderr: &mut err })
        .map_err(anyhow::Error::from)
        .and_then(|status| {
            out.flush()?;
            Ok(status)
        });
    match result {
        Ok(status) => ExitCode::from(status.exit_code()),
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            ExitCode::from(2)
        }
    }
}
