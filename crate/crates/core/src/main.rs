use std::process::ExitCode;

fn main() -> ExitCode {
    let code = qn_backprop::cli::run(std::env::args_os());
    ExitCode::from(code as u8)
}
