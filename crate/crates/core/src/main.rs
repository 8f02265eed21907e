fn main() {
    std::process::exit(qubitmech::cli::main_with_args(std::env::args_os()));
}
