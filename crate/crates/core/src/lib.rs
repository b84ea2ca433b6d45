//! Clearing and portfolio compression for financial networks with default costs.

pub mod clearing;
pub mod compress;
pub mod fixtures;
pub mod gadgets;
pub mod io;
pub mod lp;
pub mod market;
pub mod milp_compress;
pub mod rational;
pub mod simlab;

pub use market::{
    ClearingError, ClearingModel, ClearingVector, ClearingViolation, Compression, CompressionError, DefaultReport,
    FinancialMarket, Matrix, Violation,
};
pub use rational::Rational;
