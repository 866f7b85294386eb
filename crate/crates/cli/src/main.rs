use clap::Parser;

fn main() {
    let cli = mcvc::cli::Cli::parse();
    if let Err(e) = mcvc::cli::run(cli) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
