use std::process::ExitCode;

fn main() -> ExitCode {
    panelmed::cli::main_entry()
}
