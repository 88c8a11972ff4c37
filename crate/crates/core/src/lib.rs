//! Build, maintain and navigate a dual-view graph of a Python repository.
//!
//! The graph pairs a three-level functional hierarchy (areas, categories,
//! subcategories) over files, classes and functions with the static
//! dependency edges between those code entities.

pub mod cli;
pub mod code_index;
pub mod config;
pub mod evalkit;
pub mod evolution;
pub mod extractor;
pub mod graph;
pub mod provider;
pub mod toolkit;
