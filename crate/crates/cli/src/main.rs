fn main() {
    std::process::exit(xaudit_cli::dispatch(std::env::args_os()));
}
