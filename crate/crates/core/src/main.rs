fn main() {
    std::process::exit(pulsed_rotor::cli::run(std::env::args_os()));
}
