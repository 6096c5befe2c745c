use std::io;
use std::process::ExitCode;

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    ExitCode::from(afapprox::cli::main_with(&argv, &mut io::stdout(), &mut io::stderr()))
}
