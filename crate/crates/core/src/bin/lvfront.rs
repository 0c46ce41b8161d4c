fn main() {
    std::process::exit(lvfront::cli::run_command(std::env::args()));
}
