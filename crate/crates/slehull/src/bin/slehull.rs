use std::process::ExitCode;

fn main() -> ExitCode {
    slehull::cli::main()
}
