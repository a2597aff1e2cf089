fn main() {
    std::process::exit(simrep::cli::run(std::env::args_os()));
}
