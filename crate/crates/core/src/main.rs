fn main() {
    std::process::exit(wginv::cli::main_from_args(std::env::args_os()));
}
