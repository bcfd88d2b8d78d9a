fn main() {
    std::process::exit(chainlock::cli::run(std::env::args_os()));
}
