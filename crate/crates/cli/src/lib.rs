//! `ssf-lab`: runs one spectral-shift experiment per invocation and writes
//! CSVs plus a provenance manifest into a timestamped directory.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod selftest;
