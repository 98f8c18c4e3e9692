use clap::Parser;

fn main() {
    let cli = relcal::config::Cli::parse();
    if let Err(e) = relcal::run(cli) {
        eprintln!("relcal: {e}");
        std::process::exit(e.exit_code());
    }
}
