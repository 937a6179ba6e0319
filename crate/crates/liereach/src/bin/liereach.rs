fn main() {
    std::process::exit(liereach::cli::run(std::env::args_os()));
}
