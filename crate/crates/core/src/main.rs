fn main() {
    std::process::exit(cauchy_space::cli::run(std::env::args_os()));
}
