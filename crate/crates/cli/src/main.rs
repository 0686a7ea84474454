fn main() {
    std::process::exit(genset_cli::run(std::env::args_os()));
}
