fn main() {
    std::process::exit(fieldconc::cli::main_with_args(std::env::args_os()));
}
