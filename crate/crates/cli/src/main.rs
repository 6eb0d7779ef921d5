fn main() {
    std::process::exit(infogap_cli::run(std::env::args_os()));
}
