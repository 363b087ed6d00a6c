//! Classic and nested performance profiles for benchmarking solvers.
//!
//! The usual pipeline reads a [`TimingMatrix`], computes ratios and profiles
//! with [`compute_ratios`] / [`compute_profile`] or the whole nested run with
//! [`nested_profiles`], and hands the curves to [`report`] for export.

pub mod adversarial;
pub mod curve;
pub mod ingest;
pub mod nested;
pub mod profile;
pub mod report;

pub use adversarial::{
    check_flip, default_spec, generate, AdversarialError, AdversarialSpec, FlipReport,
};
pub use curve::{l1_distance, merged_breakpoints, ProfileCurve, Step};
pub use ingest::{parse_timings, write_timings, Cell, Format, IngestError, TimingMatrix};
pub use nested::{
    classic_ranking, nested_profiles, next_wave, replay_nested, select_best, NestedResult,
    ProfileConfig, SelectionRule, TieBreak, TieBreaker, WaveCount,
};
pub use profile::{
    compute_profile, compute_ratios, success_fraction, wins, FailureRatio, ProfileError,
    RatioMatrix,
};
