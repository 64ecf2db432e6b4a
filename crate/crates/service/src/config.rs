//! Declarative pipeline configuration (TOML).

use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use hubflow_core::od::CongestionThresholds;
use hubflow_core::probe::{Geofence, DEFAULT_HUB_RADIUS_M};
use hubflow_core::{LonLat, PeriodScheme};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::RunError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    /// Output directory, relative to the config file.
    pub workspace: PathBuf,
    pub inputs: Inputs,
    pub hub: HubConfig,
    #[serde(default)]
    pub periods: PeriodsConfig,
    #[serde(default)]
    pub forecast: ForecastConfig,
    #[serde(default)]
    pub analysis: AnalysisConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Inputs {
    pub probes: PathBuf,
    pub zones: PathBuf,
    #[serde(default)]
    pub network: Option<PathBuf>,
}

/// Circle given by `lon`/`lat`/`radius_m`, or a closed `polygon` ring.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HubConfig {
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub lon: Option<f64>,
    #[serde(default)]
    pub lat: Option<f64>,
    #[serde(default)]
    pub radius_m: Option<f64>,
    #[serde(default)]
    pub polygon: Option<Vec<[f64; 2]>>,
}

impl HubConfig {
    pub fn geofence(&self) -> Result<Geofence, String> {
        let fence = match (&self.polygon, self.lon, self.lat) {
            (Some(ring), None, None) => {
                if self.radius_m.is_some() {
                    return Err("radius_m does not apply to a polygon hub".into());
                }
                Geofence::Polygon { ring: ring.iter().map(|p| LonLat::new(p[0], p[1])).collect() }
            }
            (None, Some(lon), Some(lat)) => Geofence::Circle {
                center: LonLat::new(lon, lat),
                radius_m: self.radius_m.unwrap_or(DEFAULT_HUB_RADIUS_M),
            },
            _ => return Err("hub needs either lon and lat, or a polygon".into()),
        };
        fence.validate().map_err(|e| e.to_string())?;
        Ok(fence)
    }

    /// Point used to pick the hub zone and to measure service extent.
    pub fn center(&self) -> LonLat {
        match (&self.polygon, self.lon, self.lat) {
            (_, Some(lon), Some(lat)) => LonLat::new(lon, lat),
            (Some(ring), _, _) => {
                let ring: Vec<LonLat> = ring.iter().map(|p| LonLat::new(p[0], p[1])).collect();
                hubflow_core::geo::ring_centroid(&ring)
            }
            _ => LonLat::new(f64::NAN, f64::NAN),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PeriodsConfig {
    pub count: Option<u32>,
    /// Period starts in minutes after local midnight; overrides `count`.
    pub boundaries_min: Option<Vec<u32>>,
    pub utc_offset_min: i32,
}

impl Default for PeriodsConfig {
    fn default() -> Self {
        Self { count: None, boundaries_min: None, utc_offset_min: 480 }
    }
}

impl PeriodsConfig {
    pub fn scheme(&self) -> hubflow_core::Result<PeriodScheme> {
        match (&self.boundaries_min, self.count) {
            (Some(b), _) => PeriodScheme::new(b.clone(), self.utc_offset_min),
            (None, Some(n)) => PeriodScheme::equal(n, self.utc_offset_min),
            (None, None) => PeriodScheme::equal(12, self.utc_offset_min),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ForecastConfig {
    /// Training days; both ends default to the data's date span.
    pub train_start: Option<NaiveDate>,
    pub train_end: Option<NaiveDate>,
    /// Hold-out days for validation, never used for training.
    pub holdout: Vec<NaiveDate>,
    pub exclude_dates: Vec<NaiveDate>,
    pub alpha: f64,
    /// Drop days without a single hub crossing from training and hold-out.
    pub skip_empty_days: bool,
}

impl Default for ForecastConfig {
    fn default() -> Self {
        Self {
            train_start: None,
            train_end: None,
            holdout: Vec::new(),
            exclude_dates: Vec::new(),
            alpha: hubflow_core::stats::DEFAULT_ALPHA,
            skip_empty_days: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisConfig {
    pub include_degenerate: bool,
    pub min_samples: usize,
    pub reliability_threshold: f64,
    pub free_kmh: f64,
    pub slow_kmh: f64,
    /// Coverage fraction reported as the bundle's service extent.
    pub service_coverage: f64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        let t = CongestionThresholds::default();
        Self {
            include_degenerate: false,
            min_samples: hubflow_core::od::DEFAULT_MIN_SAMPLES,
            reliability_threshold: hubflow_core::od::DEFAULT_RELIABILITY_THRESHOLD,
            free_kmh: t.free_kmh,
            slow_kmh: t.slow_kmh,
            service_coverage: 0.9,
        }
    }
}

impl AnalysisConfig {
    pub fn thresholds(&self) -> CongestionThresholds {
        CongestionThresholds { free_kmh: self.free_kmh, slow_kmh: self.slow_kmh }
    }
}

/// Parses TOML into `T`, accepting bare TOML dates wherever a date string is
/// expected.
pub fn from_toml<T: DeserializeOwned>(text: &str) -> Result<T, String> {
    let value: toml::Value = toml::from_str(text).map_err(|e| e.to_string())?;
    stringify_dates(value).try_into().map_err(|e: toml::de::Error| e.to_string())
}

fn stringify_dates(v: toml::Value) -> toml::Value {
    match v {
        toml::Value::Datetime(d) => toml::Value::String(d.to_string()),
        toml::Value::Array(a) => toml::Value::Array(a.into_iter().map(stringify_dates).collect()),
        toml::Value::Table(t) => toml::Value::Table(t.into_iter().map(|(k, v)| (k, stringify_dates(v))).collect()),
        other => other,
    }
}

/// A config file together with the bytes it was read from and its directory.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: Config,
    pub raw: Vec<u8>,
    pub base_dir: PathBuf,
}

impl LoadedConfig {
    pub fn load(path: &Path) -> Result<Self, RunError> {
        let raw = std::fs::read(path).map_err(|e| RunError::input(path, e.to_string()))?;
        let text = std::str::from_utf8(&raw).map_err(|e| RunError::input(path, e.to_string()))?;
        let config: Config = from_toml(text).map_err(|e| RunError::input(path, e))?;
        let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let loaded = Self { config, raw, base_dir };
        loaded.validate().map_err(|e| RunError::input(path, e))?;
        Ok(loaded)
    }

    fn validate(&self) -> Result<(), String> {
        let c = &self.config;
        c.hub.geofence()?;
        c.periods.scheme().map_err(|e| e.to_string())?;
        if !(c.forecast.alpha > 0.0 && c.forecast.alpha < 1.0) {
            return Err(format!("forecast.alpha must be in (0, 1), got {}", c.forecast.alpha));
        }
        if let (Some(s), Some(e)) = (c.forecast.train_start, c.forecast.train_end) {
            if e < s {
                return Err(format!("forecast.train_end {e} precedes train_start {s}"));
            }
        }
        let a = &c.analysis;
        if !(a.slow_kmh >= 0.0 && a.free_kmh >= a.slow_kmh) {
            return Err("analysis thresholds need 0 <= slow_kmh <= free_kmh".into());
        }
        if !(a.reliability_threshold.is_finite() && a.reliability_threshold >= 0.0) {
            return Err("analysis.reliability_threshold must be >= 0".into());
        }
        if !(a.service_coverage > 0.0 && a.service_coverage <= 1.0) {
            return Err("analysis.service_coverage must be in (0, 1]".into());
        }
        Ok(())
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn workspace(&self) -> PathBuf {
        self.resolve(&self.config.workspace)
    }
}
