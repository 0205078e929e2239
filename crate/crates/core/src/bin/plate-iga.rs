fn main() {
    std::process::exit(plate_iga::cli::main_with_args(std::env::args_os()));
}
