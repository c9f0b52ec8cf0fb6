fn main() {
    std::process::exit(hearsay::cli::run(std::env::args_os()));
}
