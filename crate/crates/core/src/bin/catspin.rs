fn main() {
    std::process::exit(catspin::cli::main_with_args(std::env::args_os()));
}
