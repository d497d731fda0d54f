fn main() {
    std::process::exit(cfqmc::cli::main_with_args(std::env::args_os()));
}
