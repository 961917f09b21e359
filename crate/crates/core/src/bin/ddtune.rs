fn main() {
    std::process::exit(ddtune::cli::main_with_args(std::env::args_os()));
}
