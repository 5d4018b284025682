//! Exact unlearning for linear graph neural networks.
//!
//! A linear GNN propagates node features `L` hops with a fixed normalized
//! operator and feeds them to a convex classifier. Trained from zero, every
//! weight row lies in the span of the raw feature rows, so deleting nodes
//! reduces to projecting the weights onto the span of the rows that remain.

pub mod cli;
pub mod config;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod features;
pub mod graph;
pub mod linear_model;
pub mod seed;
pub mod unlearn;

pub use error::{Error, Result};
