use std::process::ExitCode;

fn main() -> ExitCode {
    linepack_cli::main_from(std::env::args_os())
}
