pub mod arbitrage;
pub mod cev_grid;
pub mod cli;
pub mod exponential;
pub mod expr;
pub mod integrability;
pub mod interval;
pub mod modelfile;
pub mod quadrature;
pub mod report;
pub mod scale;
pub mod sim;
pub mod verdict;

pub use expr::{parse, Expr};
pub use interval::{Interval, Side};
pub use verdict::{Method, Truth, Verdict};
