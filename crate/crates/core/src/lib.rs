//! Translate LaTeX projects between languages while keeping them compilable.

pub mod diag;
pub mod parser;
pub mod llm;
pub mod filter;
pub mod prompts;
pub mod agents;
pub mod evaluator;
pub mod generator;
pub mod config;
pub mod workflow;
