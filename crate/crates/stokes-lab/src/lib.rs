pub mod classical;
pub mod cli;
pub mod error;
pub mod formal;
pub mod gtrep;
pub mod linalg;
pub mod quantum;
pub mod specfun;
pub mod verify;
