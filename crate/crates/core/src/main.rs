fn main() {
    std::process::exit(llpbench::cli::run(std::env::args_os()));
}
