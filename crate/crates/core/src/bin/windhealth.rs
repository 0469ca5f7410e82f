fn main() {
    std::process::exit(windhealth::cli::run(std::env::args_os()));
}
