use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A quantity that must be non-negative (or positive) was not.
    #[error("invalid {name}: {value} ({reason})")]
    InvalidQuantity {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("bit array length mismatch: expected {expected} bits, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("upset bit (frame {frame}, bit {bit}) outside geometry {frames}x{bits_per_frame}")]
    OutOfBounds {
        frame: u32,
        bit: u32,
        frames: u32,
        bits_per_frame: u32,
    },

    #[error("readback cycle {index} out of range ({count} cycles)")]
    CycleOutOfRange { index: usize, count: usize },

    #[error("no events to histogram")]
    EmptyEvents,

    #[error("malformed container at byte offset {offset}: {message}")]
    MalformedContainer { offset: usize, message: String },

    #[error("malformed input: {0}")]
    MalformedInput(String),

    #[error("counts for {benchmark} exceed total runs ({errors} error runs > {runs} runs)")]
    CountsExceedRuns {
        benchmark: String,
        errors: u64,
        runs: u64,
    },

    #[error("unknown environment '{0}'")]
    UnknownEnvironment(String),

    #[error("unknown profile '{0}'")]
    UnknownProfile(String),

    #[error("profile '{0}' has no memories to simulate")]
    EmptyProfile(String),

    #[error(
        "shape {frame_extent}x{bit_extent} does not fit in geometry {frames}x{bits_per_frame}"
    )]
    ShapeTooLarge {
        frame_extent: u32,
        bit_extent: u32,
        frames: u32,
        bits_per_frame: u32,
    },

    #[error("rows do not share one environment and deployment")]
    MixedScenario,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Whether the error stems from unparseable input rather than a
    /// well-formed input with invalid values.
    pub fn is_malformed_input(&self) -> bool {
        matches!(
            self,
            Error::MalformedContainer { .. }
                | Error::MalformedInput(_)
                | Error::LengthMismatch { .. }
                | Error::Io(_)
                | Error::Json(_)
                | Error::Csv(_)
        )
    }

    pub(crate) fn negative(name: &'static str, value: f64) -> Self {
        Error::InvalidQuantity {
            name,
            value,
            reason: "must be a finite non-negative number",
        }
    }

    pub(crate) fn non_positive(name: &'static str, value: f64) -> Self {
        Error::InvalidQuantity {
            name,
            value,
            reason: "must be a finite positive number",
        }
    }
}
