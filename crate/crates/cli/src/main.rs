fn main() {
    std::process::exit(saag_cli::run(std::env::args_os()));
}
