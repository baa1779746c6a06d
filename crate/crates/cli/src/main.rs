fn main() {
    std::process::exit(qcwave_cli::dispatch(std::env::args_os()));
}
