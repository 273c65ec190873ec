fn main() {
    std::process::exit(realinterp_harness::cli::run(std::env::args_os()));
}
