fn main() {
    std::process::exit(flexagg_cli::cli::run(std::env::args_os()));
}
