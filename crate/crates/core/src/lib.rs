#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod extraction;
pub mod image;
pub mod manifest;
pub mod types;
pub mod reconstruction;
pub mod verifier;
pub mod dataset;
pub mod pipeline;
pub mod report;
pub mod cli;
