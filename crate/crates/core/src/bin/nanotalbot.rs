fn main() {
    std::process::exit(nanotalbot::cli::main_with_args(std::env::args_os()));
}
