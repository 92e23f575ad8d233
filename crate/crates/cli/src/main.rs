use std::process::ExitCode;

fn main() -> ExitCode {
    mapf_collapse_cli::main_with_args(std::env::args_os())
}
