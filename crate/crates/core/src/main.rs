fn main() {
    std::process::exit(psv_forge::cli::run(std::env::args_os()));
}
