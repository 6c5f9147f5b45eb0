fn main() {
    std::process::exit(waybound_cli::run(std::env::args_os()));
}
