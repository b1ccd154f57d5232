use std::process::ExitCode;

fn main() -> ExitCode {
    let outcome = revelation::cli::run(std::env::args_os());
    if !outcome.human.is_empty() {
        println!("{}", outcome.human.trim_end());
    }
    ExitCode::from(outcome.exit_code as u8)
}
