//! Batch pipeline, bundle format and read-only HTTP API for hub analyses.

pub mod api;
pub mod bundle;
pub mod config;
pub mod error;
pub mod fixture;
pub mod gen;
pub mod pipeline;
