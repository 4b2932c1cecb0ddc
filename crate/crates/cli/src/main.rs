use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(spdc_cli::run(std::env::args_os()))
}
