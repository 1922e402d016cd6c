fn main() {
    std::process::exit(iontrap_cf_cli::main_with(std::env::args_os()));
}
