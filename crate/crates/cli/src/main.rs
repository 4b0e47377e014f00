fn main() {
    std::process::exit(keff_cli::main_with_args(std::env::args_os()));
}
