fn main() {
    std::process::exit(canm_cli::run_cli(std::env::args_os()));
}
