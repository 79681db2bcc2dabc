use clap::Parser;

fn main() {
    let args = specvar::cli::Args::parse();
    std::process::exit(specvar::cli::run(&args));
}
