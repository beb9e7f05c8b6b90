fn main() {
    std::process::exit(fapchan_cli::run(std::env::args()));
}
