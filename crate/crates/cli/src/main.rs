fn main() {
    std::process::exit(fhmm_cli::main_with(std::env::args_os()));
}
