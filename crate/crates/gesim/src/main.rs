fn main() {
    std::process::exit(gesim::cli::run(std::env::args()));
}
