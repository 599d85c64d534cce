fn main() {
    std::process::exit(mixcov::cli::run());
}
