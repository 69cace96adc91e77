use std::process::ExitCode;

use clap::Parser;
use subproj_cli::{run_command, RunConfig};

fn main() -> ExitCode {
    let cfg = RunConfig::parse();
    let code = run_command(
        &cfg,
        &mut std::io::stdin().lock(),
        &mut std::io::stdout().lock(),
        &mut std::io::stderr().lock(),
    );
    ExitCode::from(code as u8)
}
