fn main() {
    std::process::exit(nmvm_core::cli::run());
}
