fn main() {
    std::process::exit(cdiffmr::cli::run(std::env::args_os()));
}
