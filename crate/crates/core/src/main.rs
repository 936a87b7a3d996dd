fn main() {
    std::process::exit(aimc_core::cli::run(std::env::args_os()));
}
