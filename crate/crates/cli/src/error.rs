use std::process::ExitCode;

use logfuture::Error;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("strict mode: {0}")]
    Strict(String),
    #[error("{0} claim(s) failed")]
    Claims(usize),
}

pub const EXIT_OTHER: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_PARSE: u8 = 3;
pub const EXIT_CLAIMS: u8 = 4;

pub fn exit_code(err: &anyhow::Error) -> ExitCode {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<CliError>() {
            return ExitCode::from(match e {
                CliError::Usage(_) => EXIT_USAGE,
                CliError::Strict(_) => EXIT_OTHER,
                CliError::Claims(_) => EXIT_CLAIMS,
            });
        }
        if let Some(e) = cause.downcast_ref::<Error>() {
            return ExitCode::from(match e {
                Error::ScenarioSyntax { .. }
                | Error::Scenario(_)
                | Error::DuplicateStimulus(_)
                | Error::CorruptSnapshot(_)
                | Error::SnapshotVersion { .. } => EXIT_PARSE,
                Error::UnknownFigure(_)
                | Error::UnknownStimulus(_)
                | Error::InvalidGrid(_)
                | Error::InvalidWindow(_) => EXIT_USAGE,
                _ => EXIT_OTHER,
            });
        }
        if cause.is::<serde_json::Error>() {
            return ExitCode::from(EXIT_PARSE);
        }
    }
    ExitCode::from(EXIT_OTHER)
}
