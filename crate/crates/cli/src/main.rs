use std::process::ExitCode;

use activenet_cli::args::THREADS_ENV;
use activenet_cli::{run, Category, Cli, CliError};
use clap::error::ErrorKind;
use clap::Parser;

fn threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = value.parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        CliError::Usage(format!("{THREADS_ENV}=`{value}` is not a positive integer"))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(e.to_string()))
}

fn fail(e: &CliError) -> ExitCode {
    let category = e.category();
    eprintln!("error[{}]: {e}", category.name());
    ExitCode::from(category.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(Category::Usage.exit_code() as u8),
            };
        }
    };
    if let Err(e) = threads() {
        return fail(&e);
    }
    let mut warnings = Vec::new();
    let result = run(cli, &mut warnings);
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    match result {
        Ok(files) => {
            for f in &files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => fail(&e),
    }
}
