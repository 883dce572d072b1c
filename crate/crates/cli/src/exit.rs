use std::process::ExitCode;

/// Exit status 1: a claim or tolerance check failed, or the simulation
/// itself errored.
pub const FAILURE: u8 = 1;
/// Exit status 2: usage, configuration or precondition error.
pub const USAGE: u8 = 2;

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub error: anyhow::Error,
}

impl CliError {
    pub fn usage(error: impl Into<anyhow::Error>) -> Self {
        CliError { code: USAGE, error: error.into() }
    }

    pub fn failure(error: impl Into<anyhow::Error>) -> Self {
        CliError { code: FAILURE, error: error.into() }
    }

    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(self.code)
    }
}

impl From<assistfair::Error> for CliError {
    fn from(e: assistfair::Error) -> Self {
        use assistfair::Error as E;
        let config = e.is_precondition()
            || matches!(
                e,
                E::NonPositiveNoiseVar(_)
                    | E::CovariateProbsSum(_)
                    | E::InvalidSpec(_)
                    | E::InvalidConfig(_)
                    | E::InvalidPrior(_)
                    | E::UnknownCovariate(_)
                    | E::TooFewReplications { .. }
            );
        if config {
            CliError::usage(e)
        } else {
            CliError::failure(e)
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::failure(e)
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::failure(e)
    }
}
