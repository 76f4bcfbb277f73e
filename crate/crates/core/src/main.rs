fn main() {
    std::process::exit(linear_gan::cli::run(std::env::args_os()));
}
