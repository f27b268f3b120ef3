pub mod corpus;
pub mod grammar;
pub mod tree;
pub mod generation;
pub mod orchestrator;
pub mod eval;
pub mod service;
