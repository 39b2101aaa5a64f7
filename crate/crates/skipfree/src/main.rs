fn main() {
    std::process::exit(skipfree::cli::run(std::env::args_os()));
}
