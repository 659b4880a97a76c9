fn main() {
    std::process::exit(aks::cli::dispatch(std::env::args_os()));
}
