fn main() {
    std::process::exit(thingap::cli::run(std::env::args_os()));
}
