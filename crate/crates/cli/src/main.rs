fn main() {
    std::process::exit(gridcast_cli::main_with_args(std::env::args_os()));
}
