fn main() {
    std::process::exit(commdecide::cli::main());
}
