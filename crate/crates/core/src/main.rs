fn main() {
    std::process::exit(gidn::cli::cli_main(std::env::args().collect()));
}
