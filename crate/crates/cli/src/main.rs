fn main() {
    std::process::exit(percolation_cli::run_cli(std::env::args_os()));
}
