fn main() {
    std::process::exit(manyknot::cli::run(std::env::args_os()));
}
