fn main() {
    std::process::exit(prm_lab::cli::run(std::env::args_os()));
}
