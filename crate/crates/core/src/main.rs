fn main() {
    std::process::exit(gamma_approx::cli::run(std::env::args_os()));
}
