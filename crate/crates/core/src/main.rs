fn main() {
    std::process::exit(invariant_sets::cli::run(std::env::args_os()));
}
