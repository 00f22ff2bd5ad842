//! Experiment runner: configuration, the solve/extract/analyze pipeline,
//! manifests with content hashes, and SVG output.

mod config;
mod run;
mod svg;

pub use config::{
    load_config, parse_config, parse_config_with, AnalysisRequests, BoundaryPreset, EnergySection, RunConfig,
    ScheduleSection,
};
pub use run::{
    analyze, fnv1a, hash_hex, read_manifest, run, verify_manifest, zero_field_hash, AuditSummary, ContactSummary,
    FileCheck, FileEntry, ProfileSummary, RunManifest, StageStatus, Summary, Versions, WitnessSummary,
    MANIFEST_FILE, SOLUTION_FILE, SUMMARY_FILE, TIMINGS_FILE,
};
pub use svg::{cone_wedges, emit_svg, render_svg, Frame, Plot, Style};
