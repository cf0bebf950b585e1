fn main() {
    std::process::exit(pufc::cli::run(std::env::args_os()));
}
