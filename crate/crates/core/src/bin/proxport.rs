fn main() {
    std::process::exit(proxport::cli::run(std::env::args_os()));
}
