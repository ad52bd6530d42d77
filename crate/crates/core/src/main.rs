fn main() {
    std::process::exit(ss_gamp::cli::main_with_args(std::env::args()));
}
