//! Command-line front end: file formats, configuration, reports and
//! reliability diagrams on top of `relcal-core`.

pub mod commands;
pub mod config;
pub mod diagram;
pub mod error;
pub mod formats;
pub mod report;

use config::{Cli, Command, FileConfig};
pub use error::{CliError, Result};

/// Executes a parsed command line.
pub fn run(cli: Cli) -> Result<()> {
    let file = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    match cli.command {
        Command::Synth(mut a) => {
            a.fill_from(&file);
            for path in commands::cmd_synth(&a)? {
                println!("wrote {}", path.display());
            }
        }
        Command::Evaluate(mut a) => {
            a.fill_from(&file);
            let settings = commands::EvaluateSettings::resolve(&a)?;
            let reports = commands::cmd_evaluate(&settings)?;
            print!("{}", report::summary_table(&reports));
        }
        Command::Diagram(mut a) => {
            a.fill_from(&file);
            let (table, svg) = commands::cmd_diagram(&a)?;
            println!("wrote {}\nwrote {}", table.display(), svg.display());
        }
        Command::BetaSweep(mut a) => {
            a.fill_from(&file);
            let (path, _) = commands::cmd_beta_sweep(&a)?;
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}
