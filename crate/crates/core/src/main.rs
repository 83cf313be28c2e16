fn main() {
    std::process::exit(mems_core::cli::main_with_args(std::env::args_os()));
}
