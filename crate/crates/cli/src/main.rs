fn main() {
    std::process::exit(fraisse_cli::run(std::env::args_os()));
}
