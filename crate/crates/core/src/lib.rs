//! Lacunary walk lab: random lacunary phases `t_k = (S_k x) mod 1`, the
//! limiting variance `A_x`, the block schedule and finite-horizon limit tests.

pub mod cli;
pub mod error;
pub mod limits;
pub mod periodic;
pub mod schedule;
pub mod seeding;
pub mod variance;
pub mod walk;

pub use error::{LabError, Result};
