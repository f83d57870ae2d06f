fn main() {
    std::process::exit(fmtlab::cli::run(std::env::args_os()));
}
