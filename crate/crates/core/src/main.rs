fn main() {
    std::process::exit(cambrian_arm::cli::run_cli(std::env::args_os()));
}
