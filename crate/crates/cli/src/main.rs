use std::process::ExitCode;

fn main() -> ExitCode {
    kfbd_cli::main_with(std::env::args_os())
}
