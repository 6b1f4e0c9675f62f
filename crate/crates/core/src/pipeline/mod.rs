//! Configuration, exporters, the torus chart and the subcommand runners
//! used by the `adsnull` binary.

pub mod config;
pub mod export;
pub mod run;
pub mod torus;

pub use config::{config_hash, ProfileSpec, RunConfig};
pub use export::{Check, Sidecar};
pub use run::RunOutput;
pub use torus::{torus_embed, TorusPoint};
