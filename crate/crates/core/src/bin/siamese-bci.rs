fn main() {
    std::process::exit(siamese_bci::cli::main_with_args(std::env::args_os()));
}
