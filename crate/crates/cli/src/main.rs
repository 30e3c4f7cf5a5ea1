fn main() {
    std::process::exit(viscofix_cli::main_with_args(std::env::args_os()));
}
