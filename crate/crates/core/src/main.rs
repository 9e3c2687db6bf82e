fn main() {
    std::process::exit(sndp::cli::run(std::env::args_os()));
}
