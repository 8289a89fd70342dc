fn main() {
    std::process::exit(changerep::cli::main());
}
