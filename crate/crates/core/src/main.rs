fn main() {
    std::process::exit(typlab::cli::run(std::env::args_os()));
}
