fn main() {
    let code = fvlab::cli::run(std::env::args_os());
    std::process::exit(code);
}
