fn main() {
    std::process::exit(hetnet::experiments::cli::run(std::env::args_os()));
}
