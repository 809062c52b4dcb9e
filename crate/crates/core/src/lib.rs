//! Tangled Program Graphs: genetic-programming reinforcement learning agents
//! trained by a deterministic, parallel evolution loop.

pub mod data;
pub mod environments;
pub mod evolution;
pub mod graph;
pub mod instructions;
pub mod parallel;
pub mod program;
pub mod frontend;
