fn main() {
    std::process::exit(critsense::cli::main_with_args(std::env::args_os()));
}
