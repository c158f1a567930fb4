//! Benchmark curation, concern identification, answer refinement through a
//! chat-completion model, and experiment aggregation.

pub mod canned;
pub mod concern;
pub mod curation;
pub mod harness;
pub mod pipeline;
pub mod post_model;
pub mod provider;
pub mod refiner;
