fn main() {
    std::process::exit(distreg_cli::run(std::env::args_os()));
}
