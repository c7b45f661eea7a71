use std::process::ExitCode;

fn main() -> ExitCode {
    let stdout = std::io::stdout();
    ExitCode::from(walsh_ivp_cli::main_with_args(std::env::args_os(), &mut stdout.lock()))
}
