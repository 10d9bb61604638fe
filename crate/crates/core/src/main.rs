fn main() {
    std::process::exit(microgrid_mfc::cli::cli_main(std::env::args_os()));
}
