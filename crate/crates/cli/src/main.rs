use clap::Parser;
use torsep_cli::commands::{run, Cli};

fn main() {
    let cli = Cli::parse();
    match run(cli) {
        Ok(outcome) => {
            println!(
                "{}",
                serde_json::to_string_pretty(&outcome.json).expect("serializable")
            );
            std::process::exit(outcome.exit);
        }
        Err(failure) => {
            eprintln!(
                "{}",
                serde_json::to_string_pretty(&serde_json::json!({ "error": failure.0 }))
                    .expect("serializable")
            );
            std::process::exit(2);
        }
    }
}
