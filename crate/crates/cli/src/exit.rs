//! Process exit codes.
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | success |
//! | 1 | anything else (I/O, server) |
//! | 2 | bad arguments, configuration or input files |
//! | 3 | numerical failure in a solver or fit |
//! | 4 | study data that cannot be scored |

use std::fmt;

use liquidbench_core::analytics::AnalyticsError;
use liquidbench_core::study::StudyError;
use liquidbench_core::Error;

pub const FAILURE: u8 = 1;
pub const CONFIG: u8 = 2;
pub const NUMERICAL: u8 = 3;
pub const STUDY_DATA: u8 = 4;

/// A problem with how the tool was invoked, reported with exit code 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

pub fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<UsageError>() || cause.is::<serde_json::Error>() {
            return CONFIG;
        }
        if let Some(e) = cause.downcast_ref::<Error>() {
            if let Some(code) = core_code(e) {
                return code;
            }
        }
        if let Some(e) = cause.downcast_ref::<AnalyticsError>() {
            return analytics_code(e);
        }
        if cause.is::<StudyError>() {
            return STUDY_DATA;
        }
    }
    FAILURE
}

fn core_code(e: &Error) -> Option<u8> {
    match e {
        Error::Config(_) | Error::RadiusMismatch { .. } | Error::MissingFrame(_) | Error::Format { .. } | Error::Json(_) => {
            Some(CONFIG)
        }
        Error::NonFinite { .. } | Error::PressureSolve { .. } | Error::DensityBlowup { .. } => Some(NUMERICAL),
        Error::Study(_) => Some(STUDY_DATA),
        Error::Analytics(a) => Some(analytics_code(a)),
        Error::Io(_) | Error::Csv(_) => None,
    }
}

fn analytics_code(e: &AnalyticsError) -> u8 {
    match e {
        AnalyticsError::NotConverged { .. } => NUMERICAL,
        _ => STUDY_DATA,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use anyhow::Context as _;

    #[test]
    fn codes_follow_the_cause_chain() {
        let numerical: anyhow::Error = Error::PressureSolve { iterations: 3, residual: 1.0 }.into();
        assert_eq!(exit_code(&numerical.context("frame 4")), NUMERICAL);
        let degenerate: anyhow::Error = Error::from(AnalyticsError::Degenerate { above: vec![], below: vec![] }).into();
        assert_eq!(exit_code(&degenerate), STUDY_DATA);
        assert_eq!(exit_code(&StudyError::NoAcceptedParticipants.into()), STUDY_DATA);
        let stalled: anyhow::Error = AnalyticsError::NotConverged { iterations: 1, gradient: 1.0 }.into();
        assert_eq!(exit_code(&stalled), NUMERICAL);
        assert_eq!(exit_code(&usage("no frames")), CONFIG);
        let io: anyhow::Error = Error::Io(std::io::Error::other("disk")).into();
        assert_eq!(exit_code(&io), FAILURE);
        let wrapped = Err::<(), _>(std::io::Error::other("x")).context("reading").unwrap_err();
        assert_eq!(exit_code(&wrapped), FAILURE);
    }
}
