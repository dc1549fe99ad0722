use std::process::ExitCode;

fn main() -> ExitCode {
    intermit::cli::main_with_args(std::env::args_os())
}
