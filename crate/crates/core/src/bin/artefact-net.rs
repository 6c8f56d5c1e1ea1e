fn main() {
    std::process::exit(artefact_net::cli::main_with_args(std::env::args_os()));
}
