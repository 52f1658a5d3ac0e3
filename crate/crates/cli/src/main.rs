mod commands;
mod config;

use std::fs;
use std::io::Write;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::Parser;
use log::LevelFilter;
use macicmac::Error;

use config::RunConfig;

const EXIT_VIOLATION: u8 = 1;
const EXIT_MALFORMED: u8 = 2;
const EXIT_INFEASIBLE: u8 = 3;

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<Error>() {
            return match e {
                Error::Json(_)
                | Error::Parse(_)
                | Error::InvalidChannel(_)
                | Error::InvalidDistribution(_)
                | Error::MissingEntry { .. }
                | Error::NonPositiveInr(_)
                | Error::DimensionMismatch { .. } => EXIT_MALFORMED,
                _ => EXIT_INFEASIBLE,
            };
        }
        if cause.is::<serde_json::Error>() || cause.is::<std::io::Error>() {
            return EXIT_MALFORMED;
        }
    }
    EXIT_INFEASIBLE
}

fn emit(cfg: &RunConfig, files: &[(&str, String)]) -> Result<()> {
    match &cfg.out {
        Some(dir) => {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            for (name, body) in files {
                let path = dir.join(name);
                fs::write(&path, body).with_context(|| format!("writing {}", path.display()))?;
                log::info!("wrote {}", path.display());
            }
        }
        None => {
            let mut out = std::io::stdout().lock();
            for (_, body) in files {
                out.write_all(body.as_bytes())?;
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cfg = RunConfig::parse();
    let level = match cfg.verbose {
        0 => LevelFilter::Warn,
        1 => LevelFilter::Info,
        2 => LevelFilter::Debug,
        _ => LevelFilter::Trace,
    };
    env_logger::Builder::new().filter_level(level).init();

    let outcome = match commands::run(&cfg.command) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(exit_code(&e));
        }
    };
    if let Err(e) = emit(&cfg, &outcome.files) {
        eprintln!("error: {e:#}");
        return ExitCode::from(EXIT_INFEASIBLE);
    }
    match outcome.violation {
        Some(msg) => {
            eprintln!("violation: {msg}");
            ExitCode::from(EXIT_VIOLATION)
        }
        None => ExitCode::SUCCESS,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_the_error_kind() {
        let malformed = anyhow::Error::new(Error::Parse("x".into())).context("reading input");
        assert_eq!(exit_code(&malformed), EXIT_MALFORMED);
        let infeasible = anyhow::Error::new(Error::EmptyCell);
        assert_eq!(exit_code(&infeasible), EXIT_INFEASIBLE);
        let io = anyhow::Error::new(std::io::Error::from(std::io::ErrorKind::NotFound));
        assert_eq!(exit_code(&io), EXIT_MALFORMED);
    }
}
