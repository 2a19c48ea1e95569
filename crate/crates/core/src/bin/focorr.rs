fn main() {
    std::process::exit(focorr::cli::main_with_args(std::env::args_os()));
}
