fn main() {
    std::process::exit(tilebesov::cli::main_with_args(std::env::args_os()));
}
