fn main() {
    std::process::exit(price_cli::run(std::env::args_os()));
}
