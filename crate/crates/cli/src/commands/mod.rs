pub mod eval;
pub mod fixture;
pub mod generate;
pub mod plot;
pub mod train;
pub mod tune;
