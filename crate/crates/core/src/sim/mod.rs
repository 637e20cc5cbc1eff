pub mod config;
pub mod dataset;
pub mod experiment;
pub mod generator;
pub mod world;
