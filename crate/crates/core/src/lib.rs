pub mod adversary;
pub mod cli;
pub mod eval;
pub mod forecaster;
pub mod formats;
pub mod instance;
pub mod randgen;
