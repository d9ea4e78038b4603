fn main() {
    std::process::exit(kakutani::cli::run(std::env::args_os()));
}
