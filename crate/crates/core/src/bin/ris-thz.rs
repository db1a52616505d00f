fn main() {
    std::process::exit(ris_thz::cli::run(std::env::args_os()));
}
