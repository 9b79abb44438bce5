fn main() {
    std::process::exit(rescalc::cli::run());
}
