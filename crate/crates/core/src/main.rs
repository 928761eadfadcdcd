fn main() {
    std::process::exit(splitting_hmc::cli::main_with_args(std::env::args_os()));
}
