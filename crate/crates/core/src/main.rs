fn main() {
    std::process::exit(cqrf::cli::main_with_args(std::env::args_os()));
}
