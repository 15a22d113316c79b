fn main() {
    std::process::exit(sectorcap_cli::run());
}
