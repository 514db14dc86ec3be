//! Command-line front end for the mu-kit toolkit: report formatting and
//! the scenario registry.

pub mod report;
pub mod scenarios;
