fn main() {
    std::process::exit(nrdf_cli::run::main_entry());
}
