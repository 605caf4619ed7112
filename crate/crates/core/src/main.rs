fn main() {
    std::process::exit(glauber_dl::cli::main());
}
