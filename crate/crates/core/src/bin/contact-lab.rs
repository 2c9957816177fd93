fn main() {
    std::process::exit(contact_lab::cli::main_with_args(std::env::args_os()));
}
