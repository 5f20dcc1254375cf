fn main() {
    std::process::exit(hpl_cli::cli_main(std::env::args().collect()));
}
