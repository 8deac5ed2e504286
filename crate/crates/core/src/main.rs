fn main() {
    std::process::exit(subdet::cli::run(std::env::args_os()));
}
