fn main() {
    std::process::exit(gyrocompass::cli::run(std::env::args_os()));
}
