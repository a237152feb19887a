use clap::error::ErrorKind;
use clap::Parser;
use slgap::cli::{self, Cli};

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            std::process::exit(cli::EXIT_OK);
        }
        Err(e) => {
            eprintln!("{e}");
            std::process::exit(cli::EXIT_USAGE);
        }
    };
    match cli::run(cli) {
        Ok(code) => std::process::exit(code),
        Err(err) => {
            eprintln!("error: {err}");
            std::process::exit(err.exit_code());
        }
    }
}
