fn main() {
    std::process::exit(bubble_tower::cli::run(std::env::args_os()));
}
