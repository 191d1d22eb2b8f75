//! Omission-aware fact verification.
//!
//! The pipeline aligns evidence sentences against a claim, infers the claim's
//! implied intent, tests the assumptions behind that intent counterfactually,
//! retrieves the hidden evidence that undermines them, and re-assesses a base
//! verdict in light of it. Every model interaction goes through
//! [`gateway::Gateway`], so the whole pipeline runs offline against a
//! [`gateway::MockBackend`].

pub mod corpus;
pub mod gateway;
pub mod error;
pub mod endpoints;
pub mod alignment;
pub mod intent;
pub mod causality;
pub mod che;
pub mod verdict;
pub mod eval;
pub mod pipeline;
pub mod fixtures;
pub mod config;
pub mod cli;
