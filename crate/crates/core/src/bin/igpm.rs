fn main() {
    std::process::exit(igpm::cli::run(std::env::args_os()));
}
