mod args;
mod run;

use std::error::Error as _;
use std::process::ExitCode;

use args::{parse_args, ParseFailure};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();

    let cfg = match parse_args(std::env::args_os()) {
        Ok(cfg) => cfg,
        Err(ParseFailure::Clap(e)) => e.exit(),
        Err(ParseFailure::Usage(e)) => {
            eprintln!("error: {e}");
            eprintln!("\nFor more information, try '--help'.");
            return ExitCode::from(2);
        }
    };

    match run::execute(&cfg) {
        Ok(summary) => {
            for line in summary {
                println!("{line}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = e.source();
            while let Some(cause) = source {
                eprintln!("  caused by: {cause}");
                source = cause.source();
            }
            ExitCode::from(1)
        }
    }
}
