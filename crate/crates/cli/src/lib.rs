//! Configuration, presets, output writers and commands of the `glvortex`
//! command-line tool.

pub mod commands;
pub mod config;
pub mod output;
pub mod presets;
pub mod selftest;

pub use config::{parse_config, Formats, RunConfig};
pub use presets::Preset;
