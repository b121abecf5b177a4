fn main() {
    std::process::exit(forge_cli::cli::main_with(std::env::args_os()));
}
