fn main() {
    std::process::exit(polyvse::cli::run(std::env::args_os()));
}
