fn main() {
    std::process::exit(symbiogame::experiments::cli_main());
}
