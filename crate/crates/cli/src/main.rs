fn main() {
    std::process::exit(qroute::run(std::env::args_os()));
}
