fn main() {
    std::process::exit(mwg::cli::run(std::env::args()));
}
