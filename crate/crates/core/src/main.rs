fn main() {
    std::process::exit(jlnet::harness::cli(std::env::args_os()));
}
