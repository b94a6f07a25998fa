fn main() {
    std::process::exit(nematic2d::cli::main_with_args(std::env::args_os()));
}
