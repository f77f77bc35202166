fn main() {
    std::process::exit(lacunary_core::cli::main_with_args(std::env::args_os()));
}
