//! Project persistence, stage orchestration, HTTP API and CLI for the cross-lingual
//! discrepancy detection pipeline in `mind-core`.

pub mod api;
pub mod cli;
pub mod config;
pub mod controlled;
pub mod error;
pub mod evaluation;
pub mod ops;
pub mod pipeline;
pub mod project;
pub mod providers;
pub mod review;
pub mod stage;
pub mod store;
pub mod synth;

pub use config::ProjectConfig;
pub use error::ServiceError;
pub use project::Project;
pub use stage::Stage;
