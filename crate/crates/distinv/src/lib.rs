pub mod cli;
pub mod formats;
pub mod process;
