fn main() {
    std::process::exit(sevkit::cli::main_with_args(std::env::args_os()));
}
