fn main() {
    std::process::exit(gibbsgap_cli::run(std::env::args().collect()));
}
