fn main() {
    std::process::exit(ppmlab_cli::cli_main(std::env::args_os()));
}
