use std::io;
use std::process::ExitCode;

use anp::cli::{execute, use_color, Cli, Reporter};
use clap::Parser;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut rep = Reporter { out: io::stderr().lock(), color: use_color() };
    let code = match execute(&cli, &mut io::stdout().lock(), &mut rep) {
        Ok(code) => code,
        Err(e) => {
            rep.error(std::path::Path::new("anp"), None, &format!("{e:#}"));
            1
        }
    };
    ExitCode::from(code as u8)
}
