fn main() {
    std::process::exit(gdof::cli::run());
}
