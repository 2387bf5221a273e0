use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(kornlab::cli::run(std::env::args_os()))
}
