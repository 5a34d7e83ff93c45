fn main() {
    std::process::exit(mimo_cfo::cli::run_from_args(std::env::args_os()));
}
