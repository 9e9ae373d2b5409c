pub mod benchmark;
pub mod bind;
pub mod gen;
pub mod scores;
pub mod train;
mod util;
