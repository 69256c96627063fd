fn main() {
    std::process::exit(relgrow_cli::run(std::env::args_os()));
}
