fn main() {
    std::process::exit(tailview::cli::run(std::env::args_os()));
}
