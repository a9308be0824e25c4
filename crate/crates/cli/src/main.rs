use clap::Parser;

fn main() {
    let cli = sfw_cli::Cli::parse();
    if let Err(e) = sfw_cli::run(cli) {
        eprintln!("error: {e:#}");
        std::process::exit(e.exit_code());
    }
}
