//! Causal average treatment effect (ATE) scores for words with respect to a
//! binary sentence attribute such as toxicity.

pub mod ate;
pub mod corpus;
pub mod models;
pub mod perturb;
pub mod report;
