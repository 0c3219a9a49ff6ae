fn main() {
    std::process::exit(fbl_jscc::cli::main_with(std::env::args_os()));
}
