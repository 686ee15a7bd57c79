//! File formats, experiment harness, and rendering for the masked
//! matrix-separation toolkit. The binary in this crate exposes the
//! `solve`, `diagnose`, `certify`, `phase`, `eda`, `mask gen`, and
//! `render` subcommands on top of `masksep-core`.

pub mod harness;
pub mod io;
pub mod render;
pub mod report;
