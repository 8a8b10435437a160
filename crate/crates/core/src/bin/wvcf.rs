fn main() {
    std::process::exit(wvcf::cli::main_from(std::env::args_os()));
}
