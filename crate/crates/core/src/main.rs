fn main() {
    std::process::exit(modetab::cli::main());
}
