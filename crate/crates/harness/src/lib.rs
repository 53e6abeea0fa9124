pub mod canon;
pub mod lines;
pub mod spec;
pub mod commands;
pub mod output;
