fn main() {
    std::process::exit(robust_wald_cli::run(std::env::args_os()));
}
