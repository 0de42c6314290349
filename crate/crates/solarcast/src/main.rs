use clap::Parser;

fn main() {
    let cli = solarcast::cli::Cli::parse();
    if let Err(e) = solarcast::cli::run(cli) {
        eprintln!("{e}");
        std::process::exit(e.exit_code());
    }
}
