fn main() {
    std::process::exit(rhfill::cli::main_with_args(std::env::args_os()));
}
