use clap::Parser;

fn main() {
    let cli = ordce_cli::Cli::parse();
    if let Err(e) = ordce_cli::run(cli) {
        eprintln!("error: {e:#}");
        std::process::exit(e.exit_code());
    }
}
