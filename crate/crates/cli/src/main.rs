fn main() {
    std::process::exit(repograph_cli::cli::main_with_args(std::env::args_os()));
}
