fn main() -> std::process::ExitCode {
    sparsebench::cli::main()
}
