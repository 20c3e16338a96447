pub mod classical;
pub mod cli;
pub mod error;
pub mod families;
pub mod matcore;
pub mod mvop;
pub mod rightops;
pub mod tbl;
