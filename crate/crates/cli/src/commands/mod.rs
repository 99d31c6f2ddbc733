pub mod bench;
pub mod dimstudy;
pub mod flow;
pub mod invert;
pub mod score;
