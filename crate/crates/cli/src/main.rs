fn main() {
    std::process::exit(conic_hypertope_cli::run(std::env::args_os()));
}
