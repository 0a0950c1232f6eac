fn main() {
    std::process::exit(whitebox_ca::cli::main_with_args(std::env::args_os()));
}
