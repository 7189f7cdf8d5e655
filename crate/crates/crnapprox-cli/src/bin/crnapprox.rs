fn main() {
    std::process::exit(crnapprox_cli::main_with_args(std::env::args_os()));
}
