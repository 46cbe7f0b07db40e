fn main() {
    std::process::exit(interbank::cli::main_with_args(std::env::args_os()));
}
