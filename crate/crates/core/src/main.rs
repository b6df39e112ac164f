fn main() {
    std::process::exit(superhedge::cli::main_with(std::env::args_os()));
}
