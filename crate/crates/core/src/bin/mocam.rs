fn main() {
    std::process::exit(mocam::cli::run_cli(std::env::args_os()));
}
