fn main() {
    std::process::exit(moral_sentiment::cli::dispatch(std::env::args_os()));
}
