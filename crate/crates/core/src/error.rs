use std::path::PathBuf;

use thiserror::Error;

/// Problems constructing or reading an [`Instance`](crate::Instance).
#[derive(Debug, Error, PartialEq)]
pub enum InstanceError {
    #[error("instance needs at least one advertiser")]
    NoAdvertisers,
    #[error("weight matrix has {len} entries, not a multiple of {n} advertisers")]
    Shape { len: usize, n: usize },
    #[error("weight w[{row}][{col}] = {value} is negative or not finite")]
    BadWeight { row: usize, col: usize, value: f64 },
    #[error("advertiser id {0} out of range")]
    DanglingAdvertiser(usize),
    #[error("trace has {got} assignments for {expected} impressions")]
    TraceLength { got: usize, expected: usize },
}

/// Parse failures for the text instance format. Every variant names the 1-based line.
#[derive(Debug, Error, PartialEq)]
pub enum ParseError {
    #[error("line {line}: malformed header, expected `{expected} <count>`")]
    Header { line: usize, expected: &'static str },
    #[error("line {line}: expected {expected} weights, found {found}")]
    RowLength { line: usize, expected: usize, found: usize },
    #[error("line {line}: `{token}` is not a number")]
    NotANumber { line: usize, token: String },
    #[error("line {line}: weight {value} is negative or not finite")]
    NegativeWeight { line: usize, value: f64 },
    #[error("line {line}: unexpected extra row (header declared {declared} impressions)")]
    ExtraRow { line: usize, declared: usize },
    #[error("file ends after {found} of {declared} impression rows")]
    MissingRows { found: usize, declared: usize },
    #[error("line {line}: advertiser count must be positive")]
    NoAdvertisers { line: usize },
}

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Parse {
        path: PathBuf,
        #[source]
        source: ParseError,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Std(#[from] std::io::Error),
}

/// Errors from the expectation engines and the algorithm drivers.
#[derive(Debug, Error, PartialEq)]
pub enum EngineError {
    #[error("instance has {m} impressions, enumeration cap is {cap}")]
    CapExceeded { m: usize, cap: usize },
    #[error("monte carlo needs at least one replica")]
    NoReplicas,
    #[error("policy covers {policy} impressions but the instance has {instance}")]
    PolicyMismatch { policy: usize, instance: usize },
    #[error("policy was built for {policy} advertisers but the instance has {instance}")]
    AdvertiserMismatch { policy: usize, instance: usize },
    #[error("parameter {name} = {value} outside [0, 1]")]
    Param { name: &'static str, value: f64 },
}

/// Errors from the λ certificate routines.
#[derive(Debug, Error, PartialEq)]
pub enum LambdaError {
    #[error("p = {p} violates p >= beta + sigma = {bound}")]
    Constraint { p: f64, bound: f64 },
    #[error("parameter {name} = {value} outside [0, 1]")]
    OutOfBox { name: &'static str, value: f64 },
    #[error("competitive ratio needs lambda >= 0, got {0}")]
    NegativeLambda(f64),
    #[error("grid resolution {0} too coarse (need at least 2)")]
    Resolution(usize),
    #[error("search budget must be positive")]
    Budget,
    #[error("no point of the box satisfies p >= beta + sigma")]
    Infeasible,
}

#[derive(Debug, Error, PartialEq)]
pub enum GenerateError {
    #[error("invalid size for {family}: {reason}")]
    Size { family: &'static str, reason: String },
}
