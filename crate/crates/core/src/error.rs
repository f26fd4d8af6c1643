use thiserror::Error;

/// Errors raised by the `netmark` library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("segment {id} has zero length after snapping")]
    DegenerateSegment { id: u64 },

    #[error("segments {first} and {second} intersect away from a shared node")]
    CrossingSegments { first: u64, second: u64 },

    #[error("network has no segments")]
    EmptyNetwork,

    #[error("invalid network point: {0}")]
    InvalidPoint(String),

    #[error("network has no degree-1 node")]
    NoBorder,

    #[error("need at least 2 points, got {0}")]
    TooFewPoints(usize),

    #[error("every timestamp is degenerate for statistic {0}")]
    AllTimesDegenerate(&'static str),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("test function {0} requires the conditional mean at r")]
    MissingContext(&'static str),

    #[error("no trips fall in month {0}")]
    EmptyMonth(String),

    #[error("station {station} is {distance:.1} m from the network (limit {limit} m)")]
    SnapTooFar { station: String, distance: f64, limit: f64 },

    #[error("{source_name}: record {record}: {message}")]
    Parse { source_name: String, record: usize, message: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse(source_name: impl Into<String>, record: usize, message: impl ToString) -> Self {
        Error::Parse { source_name: source_name.into(), record, message: message.to_string() }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
