fn main() {
    std::process::exit(lipstrip::cli::run_cli(std::env::args_os()));
}
