fn main() {
    std::process::exit(thermo_core::cli::main_with_args(std::env::args_os()));
}
