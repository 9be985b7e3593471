fn main() {
    std::process::exit(bandmin::cli::main_with_args(std::env::args_os()));
}
