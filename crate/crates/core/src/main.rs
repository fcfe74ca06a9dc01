fn main() {
    std::process::exit(haartv::cli::run(std::env::args_os()));
}
