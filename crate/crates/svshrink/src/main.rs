//! Binary entry point; all behavior lives in [`svshrink::cli`].

use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(svshrink::cli::run(std::env::args_os()) as u8)
}
