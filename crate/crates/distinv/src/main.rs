fn main() {
    std::process::exit(distinv::cli::main());
}
