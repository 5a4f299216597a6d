use std::process::ExitCode;

fn main() -> ExitCode {
    entroclust::cli::main()
}
