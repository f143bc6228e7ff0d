fn main() {
    std::process::exit(systolab::cli::main_with_args(std::env::args_os()));
}
