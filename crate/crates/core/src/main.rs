fn main() {
    std::process::exit(lesionbatch::cli::main_with_args(std::env::args_os()));
}
