fn main() {
    std::process::exit(csplens_service::cli::run(std::env::args_os()));
}
