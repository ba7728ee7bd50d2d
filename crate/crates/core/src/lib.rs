pub mod abstraction;
pub mod cli;
pub mod falsify;
pub mod formula;
pub mod groebner;
pub mod invariance;
pub mod lie;
pub mod parse;
pub mod poly;
pub mod qe;
