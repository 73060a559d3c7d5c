//! Acyclic fork-join queueing networks on top of the extended max-plus
//! algebra: the departure recurrence, seeded simulation of the network
//! cycle time, analytic lower/upper bounds on it, and a brute-force
//! property oracle for the algebraic identities the bounds rest on.

pub mod analysis;
pub mod dynamics;
pub mod network;
pub mod oracle;
pub mod report;
pub mod seeds;
pub mod service;
