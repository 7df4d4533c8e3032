use std::process::ExitCode;

fn main() -> ExitCode {
    cohort_insights::cli::main()
}
