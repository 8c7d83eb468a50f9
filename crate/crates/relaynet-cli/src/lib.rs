//! Batch front-end for relaynet: scenario files, random scenario
//! generation, SVG renders, comparisons and sweeps.

pub mod generator;
pub mod render;
pub mod report;
pub mod scenario_file;
