fn main() {
    std::process::exit(phish_iris_cli::run_command(std::env::args().skip(1)));
}
