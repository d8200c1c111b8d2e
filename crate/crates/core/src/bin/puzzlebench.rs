fn main() {
    std::process::exit(puzzlebench::cli::main());
}
