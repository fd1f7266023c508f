pub mod ffpoly;
pub mod funclib;
pub mod generator;
pub mod pipeline;
pub mod pseudolinear;
pub mod relations;
pub mod sieve;
pub mod verifier;
