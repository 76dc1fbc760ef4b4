fn main() {
    std::process::exit(ldchain::cli::run(std::env::args_os()));
}
