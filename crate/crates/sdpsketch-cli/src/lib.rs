//! Instance generators, experiment runners and CSV reporting behind the
//! `sdpsketch` command-line tool.

pub mod experiment;
pub mod gen;
pub mod report;
