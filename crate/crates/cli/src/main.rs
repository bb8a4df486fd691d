fn main() {
    std::process::exit(apdfp_cli::run(std::env::args_os()));
}
