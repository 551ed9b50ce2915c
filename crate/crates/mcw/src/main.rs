fn main() {
    std::process::exit(mcw::cli::run())
}
