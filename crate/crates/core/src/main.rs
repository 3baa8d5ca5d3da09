fn main() -> std::process::ExitCode {
    iontomo::cli::main_entry()
}
