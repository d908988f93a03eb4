//! IO, file formats, and pipeline orchestration on top of
//! `mainstreamlab-core`. The binary in this crate exposes the stages as
//! subcommands; the library surface exists so integration tests can drive
//! the same code paths directly.

pub mod config;
pub mod fixture;
pub mod formats;
pub mod manifest;
pub mod pipeline;
