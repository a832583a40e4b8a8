fn main() {
    std::process::exit(nf_workbench::cli::main_with_args(std::env::args_os()));
}
