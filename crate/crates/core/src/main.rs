fn main() {
    std::process::exit(crosswalk::cli::run(std::env::args_os()));
}
