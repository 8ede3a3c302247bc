fn main() {
    std::process::exit(flowtrace::cli::run(std::env::args_os()));
}
