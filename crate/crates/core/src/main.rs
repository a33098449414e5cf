fn main() -> std::process::ExitCode {
    toa::cli::main_entry()
}
