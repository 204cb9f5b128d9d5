use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(conforma::cli::execute(std::env::args_os()) as u8)
}
