fn main() {
    std::process::exit(tdho::cli::run(std::env::args_os()));
}
