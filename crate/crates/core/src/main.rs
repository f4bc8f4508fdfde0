fn main() {
    std::process::exit(xrv::cli::run(std::env::args_os()));
}
