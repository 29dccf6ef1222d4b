//! Arrival-time prediction and single-runway landing scheduling.
//!
//! The crate is organized as a pipeline:
//!
//! 1. [`ingest`] parses flight-track / flight-event / weather CSV files (or a
//!    seeded synthetic generator) into [`domain::Flight`] values with a fixed
//!    feature schema.
//! 2. [`boosting`] trains gradient-boosted regression trees with squared or
//!    pinball loss, optionally conditioned on the looping-event stage, and
//!    turns quantile predictions into per-flight landing-time distributions.
//! 3. [`separation`] converts those distributions plus the wake-turbulence
//!    reference matrix into reliability-adjusted pairwise minimum separation
//!    times and per-flight landing windows.
//! 4. [`scheduler`] solves the resulting time-windowed sequencing problem
//!    exactly and benchmarks it against a first-come-first-served baseline.
//!
//! [`pipeline`] wires the stages into reproducible CLI runs.

pub mod boosting;
pub mod domain;
pub mod ingest;
pub mod normal;
pub mod pipeline;
pub mod scheduler;
pub mod separation;
