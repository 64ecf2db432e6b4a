use thiserror::Error;

use crate::zones::ZoneId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Error, Debug)]
pub enum Error {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("format error: {0}")]
    Format(String),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("zone validation failed: {}", format_zone_issues(.0))]
    ZoneValidation(Vec<ZoneIssue>),
    #[error("network validation failed: {0}")]
    NetworkValidation(String),
    #[error("unknown station: {0}")]
    UnknownStation(String),
    #[error("unknown zone: {0}")]
    UnknownZone(ZoneId),
    #[error("rank-deficient design: period {period} has no observations")]
    RankDeficient { period: usize },
    #[error("not enough degrees of freedom: n = {n}, p = {p}")]
    DegreesOfFreedom { n: usize, p: usize },
    #[error("incomplete grid, missing cells (row, column): {0:?}")]
    IncompleteGrid(Vec<(usize, usize)>),
    #[error("no volume")]
    NoVolume,
    #[error("empty input: {0}")]
    Empty(String),
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

/// A single problem found while validating a zone file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ZoneIssue {
    pub zone_id: Option<ZoneId>,
    pub feature_index: usize,
    pub reason: String,
}

fn format_zone_issues(issues: &[ZoneIssue]) -> String {
    issues
        .iter()
        .map(|i| match i.zone_id {
            Some(id) => format!("zone {id}: {}", i.reason),
            None => format!("feature #{}: {}", i.feature_index, i.reason),
        })
        .collect::<Vec<_>>()
        .join("; ")
}
