fn main() {
    std::process::exit(bhlab::cli::main_with_args(std::env::args_os()));
}
