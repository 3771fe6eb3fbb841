fn main() {
    std::process::exit(quatcalc::cli::run(std::env::args_os()));
}
