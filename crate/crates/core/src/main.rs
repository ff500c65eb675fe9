use std::process::ExitCode;

fn main() -> ExitCode {
    mlpagerank::bench::cli::run(std::env::args_os())
}
