//! Sensitivity type checking, evaluation and metric-preservation testing for
//! a small functional language whose products carry L^p indices.
pub mod bunch;
pub mod checker;
pub mod cli;
pub mod harness;
pub mod lang;
pub mod metrics;
pub mod runtime;
pub mod vmetric;
