fn main() {
    std::process::exit(adiavac::cli::main());
}
