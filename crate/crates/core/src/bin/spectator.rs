fn main() {
    std::process::exit(spectator::cli::main_with_args(std::env::args_os()));
}
