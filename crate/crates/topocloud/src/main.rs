fn main() {
    std::process::exit(topocloud::cli::run_cli());
}
