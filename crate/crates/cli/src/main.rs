fn main() {
    std::process::exit(reglgcn_cli::cli::main_with(std::env::args_os()));
}
