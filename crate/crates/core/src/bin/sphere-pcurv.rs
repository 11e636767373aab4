fn main() {
    std::process::exit(sphere_pcurv::cli::main_with_args(std::env::args_os()));
}
