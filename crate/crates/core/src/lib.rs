//! VNF placement with replication: topology and traffic handling, candidate
//! paths, the dimensioning / traffic-engineering / resource-allocation
//! models, brute-force oracles and the scenario pipeline.

pub mod cost;
pub mod formulations;
pub mod oracle;
pub mod paths;
pub mod scenarios;
pub mod tiny;
pub mod topology;
pub mod traffic;
