//! Transport-hub analytics over taxi GPS probe data.
//!
//! The crate is organised as a small pipeline:
//!
//! * [`probe`] parses probe CSV files, builds per-vehicle tracks, extracts
//!   occupied trips and detects hub geofence crossings.
//! * [`zones`] loads traffic-zone polygons and locates points in them.
//! * [`od`] aggregates trips and hub events into OD matrices, period-binned
//!   flow series and accessibility / reliability / congestion summaries.
//! * [`stats`] holds the two-factor ANOVA screen, the dummy-variable
//!   regression forecaster and its inferential statistics, and MAPE validation.
//! * [`transit`] answers minimum-transfer bus queries.
//! * [`synth`] generates deterministic scenarios with known ground truth.

pub mod error;
pub mod geo;
pub mod od;
pub mod period;
pub mod probe;
pub mod serde_f64;
pub mod stats;
pub mod synth;
pub mod transit;
pub mod zones;

pub use error::{Error, Result};
pub use geo::LonLat;
pub use period::{DateRange, PeriodScheme};
pub use zones::ZoneId;
