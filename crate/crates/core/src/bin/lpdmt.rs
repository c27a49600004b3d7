fn main() {
    std::process::exit(lpdmt_core::simkit::cli::main());
}
