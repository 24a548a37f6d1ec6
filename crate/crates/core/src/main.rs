fn main() {
    std::process::exit(floquet_ep::cli::run(std::env::args_os()));
}
