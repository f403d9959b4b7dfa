fn main() {
    std::process::exit(aotoc_cli::run(std::env::args_os()));
}
