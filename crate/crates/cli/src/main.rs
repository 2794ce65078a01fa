fn main() {
    std::process::exit(ina_cli::stdio_main());
}
