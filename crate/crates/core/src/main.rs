fn main() {
    std::process::exit(fdg_core::cli::run(std::env::args_os()));
}
