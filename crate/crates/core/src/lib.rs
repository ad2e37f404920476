//! Differentiable fuzzy logic: fuzzy operators with analytic derivatives, a
//! valuation engine that turns first-order knowledge bases into
//! differentiable losses, and tools to study the resulting gradients.

pub mod autodiff;
pub mod operators;
pub mod logic;
pub mod valuation;
pub mod analysis;
pub mod oracle;
pub mod trainer;
