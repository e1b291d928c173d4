fn main() {
    std::process::exit(tripletreg::cli::main_with_args(std::env::args_os()));
}
