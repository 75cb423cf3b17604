use std::fmt;

use thiserror::Error;

/// Pipeline stage an error is attributed to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Config,
    Load,
    Resample,
    Normalize,
    Select,
    Features,
    Model,
    Train,
    Decode,
    Tune,
    Eval,
    Write,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Stage::Config => "config",
            Stage::Load => "load",
            Stage::Resample => "resample",
            Stage::Normalize => "normalize",
            Stage::Select => "select",
            Stage::Features => "features",
            Stage::Model => "model",
            Stage::Train => "train",
            Stage::Decode => "decode",
            Stage::Tune => "tune",
            Stage::Eval => "eval",
            Stage::Write => "write",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Error)]
#[error("{stage}: {message}")]
pub struct CliError {
    pub stage: Stage,
    pub message: String,
}

pub type CliResult<T> = Result<T, CliError>;

pub fn fail(stage: Stage, message: impl Into<String>) -> CliError {
    CliError {
        stage,
        message: message.into(),
    }
}

pub trait StageExt<T> {
    fn stage(self, stage: Stage) -> CliResult<T>;
    /// As [`StageExt::stage`] with a context prefix such as a file name.
    fn stage_with(self, stage: Stage, context: impl FnOnce() -> String) -> CliResult<T>;
}

impl<T, E: fmt::Display> StageExt<T> for Result<T, E> {
    fn stage(self, stage: Stage) -> CliResult<T> {
        self.map_err(|e| fail(stage, e.to_string()))
    }

    fn stage_with(self, stage: Stage, context: impl FnOnce() -> String) -> CliResult<T> {
        self.map_err(|e| fail(stage, format!("{}: {e}", context())))
    }
}
