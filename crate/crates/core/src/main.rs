use std::io::{self, Write};
use std::process::ExitCode;

use clap::Parser;
use tsm_mfcc::cli::{run, Cli};

fn main() -> ExitCode {
    // clap exits with 2 on usage errors
    let cli = Cli::parse();
    let stdout = io::stdout();
    let mut out = stdout.lock();
    let result = run(&cli, &mut out);
    let _ = out.flush();
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("tsm-mfcc: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
