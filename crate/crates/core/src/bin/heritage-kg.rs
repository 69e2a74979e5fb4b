fn main() {
    std::process::exit(heritage_kg::cli::main_with_args(std::env::args_os()));
}
