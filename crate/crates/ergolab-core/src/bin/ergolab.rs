//! Command-line entry point; all logic lives in the library.

fn main() {
    let args: Vec<String> = std::env::args().collect();
    std::process::exit(ergolab_core::harness::cli(&args));
}
