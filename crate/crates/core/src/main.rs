fn main() {
    std::process::exit(kwdual::cli::run());
}
