fn main() {
    std::process::exit(aniso_cli::cli::run(std::env::args_os()));
}
