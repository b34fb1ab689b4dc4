//! Exact and seeded-numeric checkers for screening-off conditions, Bell
//! locality, common-cause extensions and causal-set growth.
//!
//! Everything works on finite probability spaces. Weights are generic over
//! [`Weight`], so small cases can be verified in exact rationals with zero
//! tolerance while large sweeps run in `f64`.

pub mod bell;
pub mod causet;
pub mod common_cause;
pub mod error;
pub mod prob;
pub mod sel;
pub mod report;
pub mod weight;

pub use error::{LabError, Result};
pub use num::rational::BigRational;
pub use prob::{Event, Partition, ProbabilitySpace};
pub use report::{CheckReport, Tracker, Witness};
pub use weight::Weight;
