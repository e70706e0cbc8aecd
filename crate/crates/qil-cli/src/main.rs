fn main() {
    std::process::exit(qil_cli::main_entry(std::env::args_os()));
}
