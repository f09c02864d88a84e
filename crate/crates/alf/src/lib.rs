pub mod config;
pub mod engine;
pub mod environments;
pub mod genome;
pub mod network;
pub mod rng;
pub mod operators;
pub mod population;
pub mod speciation;
