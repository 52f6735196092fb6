//! Command-line and HTTP front ends for `mtt-core`.
//!
//! Every tournament lives in one append-only event log. The `mtt` binary
//! drives a log from the shell; [`service`] exposes the same operations over
//! HTTP for a director console.

pub mod files;
pub mod output;
pub mod service;
