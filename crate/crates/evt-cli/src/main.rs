fn main() {
    std::process::exit(evt_cli::cli_dispatch(std::env::args_os()));
}
