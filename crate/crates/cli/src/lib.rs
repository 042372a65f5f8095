//! Config parsing, suite orchestration and report writing for the
//! `crtfrag` binary.

// validation tests are written as !(x > 0.0) on purpose: the negation
// rejects NaN along with the out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod report;
pub mod suites;
