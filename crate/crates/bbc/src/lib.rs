//! File formats, thread-pool execution and the command-line front end for
//! `bbc-core`.

pub mod cli;
pub mod io;
pub mod parallel;
