//! Library surface of the idsbench command line: configuration, the
//! end-to-end scenario runner, reporting, and data inspection.

pub mod config;
pub mod inspect;
pub mod plotcmd;
pub mod report;
pub mod run;
