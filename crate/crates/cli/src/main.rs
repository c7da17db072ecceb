fn main() {
    std::process::exit(l0cca_cli::run(std::env::args_os()));
}
