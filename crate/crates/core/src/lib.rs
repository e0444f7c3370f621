//! Certified bounds on the label-flip robustness of linear binary classifiers.
//!
//! Given a clean training set and a targeted test point, the *robustness* of
//! the pair is the smallest number of training labels an adversary must flip
//! so that some linear classifier is consistent with the flipped data and
//! classifies the test point the way the adversary wants. This crate computes
//! that quantity exactly on small inputs (mixed-integer encoding solved by
//! branch and bound over an in-house simplex core, plus an independent
//! brute-force oracle) and brackets it on larger ones:
//!
//! * a certified lower bound from solving the exact problem on disjoint
//!   blocks of a random partition ([`lower`]),
//! * a certified upper bound from training on the set augmented with many
//!   copies of the target and counting the points the trained classifier
//!   gets wrong ([`upper`]).
//!
//! [`bounds`] chains the two into one interval per target. [`reduction`]
//! builds the vertex-cover instances used to check the exact solver against
//! combinatorial ground truth, [`sanitize`] implements a KNN relabeling
//! defense, and [`harness`] runs the poisoning experiment grid. Everything is
//! deterministic given a master seed; parallel code paths collect results by
//! index so thread scheduling cannot change any output.

pub mod bounds;
pub mod dataset;
pub mod error;
pub mod exact;
pub mod harness;
pub mod linsep;
pub mod lower;
pub mod reduction;
pub mod sanitize;
pub mod seeds;
pub mod trainer;
pub mod upper;

pub use error::{Error, Result};
