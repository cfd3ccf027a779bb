fn main() {
    std::process::exit(delay_cir::cli::run(std::env::args_os()));
}
