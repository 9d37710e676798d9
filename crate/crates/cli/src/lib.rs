//! Command-line entry points and HTTP service for repository graphs.

pub mod api;
pub mod audit;
pub mod cli;
pub mod config;
pub mod jobs;
pub mod ops;
pub mod providers;
pub mod store;
