fn main() {
    std::process::exit(sntp::cli::run(std::env::args_os()));
}
