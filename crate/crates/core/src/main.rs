use std::process::ExitCode;

fn main() -> ExitCode {
    let code = stabclt::cli::run(std::env::args_os(), &|key| std::env::var(key).ok());
    ExitCode::from(code as u8)
}
