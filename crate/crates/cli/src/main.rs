use std::process::ExitCode;

mod commands;

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().collect();
    let (code, out, err) = commands::run(&args);
    print!("{out}");
    eprint!("{err}");
    ExitCode::from(code)
}
