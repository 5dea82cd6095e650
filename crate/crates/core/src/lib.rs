//! Inexact gradient projection methods for ℓ1-ball constrained problems.
//!
//! Each outer iteration takes a gradient step and projects it onto the ball,
//! but the projection solver may stop as soon as a duality-gap ratio shows
//! enough progress. The crate ships the active-set ℓ1-ball projection, the
//! fixed-step and Armijo outer loops, a least-squares objective with
//! instance generation, independent reference oracles, and the benchmark
//! harness behind the `igpm` binary.

pub mod cli;
pub mod error;
pub mod gate;
pub mod harness;
mod kv;
pub mod linalg;
pub mod objectives;
pub mod oracles;
pub mod projection;
pub mod report;
pub mod solver;

pub use error::{Error, Result};
