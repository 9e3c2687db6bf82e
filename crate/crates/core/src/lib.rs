pub mod benders;
pub mod cli;
pub mod ef;
pub mod error;
pub mod generator;
pub mod instance;
pub mod lp;
pub mod maxflow;
pub mod milp;
pub mod ndp;
pub mod report;
pub mod scenarios;
pub mod subproblem;

pub use error::{Error, Result};
