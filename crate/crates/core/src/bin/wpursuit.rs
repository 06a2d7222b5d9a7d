fn main() {
    std::process::exit(wpursuit::cli::run_from_args(std::env::args_os()));
}
