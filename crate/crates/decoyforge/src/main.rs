use clap::Parser;

fn main() {
    let cli = decoyforge::cli::Cli::parse();
    std::process::exit(decoyforge::cli::run(cli));
}
