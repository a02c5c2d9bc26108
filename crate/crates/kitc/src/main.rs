use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(kitc::cli::parse_and_dispatch(std::env::args()) as u8)
}
