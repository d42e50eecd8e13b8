fn main() {
    std::process::exit(emgram::cli::run(std::env::args_os()));
}
