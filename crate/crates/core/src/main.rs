fn main() {
    std::process::exit(neopain::cli::run(std::env::args_os()));
}
