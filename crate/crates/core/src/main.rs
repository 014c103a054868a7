fn main() {
    std::process::exit(weakbeam::cli::run(std::env::args_os()));
}
