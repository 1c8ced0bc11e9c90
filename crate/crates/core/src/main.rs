fn main() {
    std::process::exit(territory_core::cli::main_with_args(std::env::args_os()));
}
