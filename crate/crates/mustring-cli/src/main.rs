fn main() {
    std::process::exit(mustring_cli::run(std::env::args_os()));
}
