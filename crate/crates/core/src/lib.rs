//! Exact stochastic-domination tools for lifted measures, with percolation
//! and BK experiments built on top.

pub mod augmented;
pub mod bk;
pub mod cli;
pub mod counterexamples;
pub mod coupling;
pub mod domination;
pub mod error;
pub mod flow;
pub mod lift;
pub mod measure;
pub mod percolation;
pub mod rational;

pub use coupling::{extend_coupling, integrate_couplings, is_monotone_coupling, Coupling};
pub use domination::{dominates, Domination, UpSet};
pub use error::{Error, Result};
pub use measure::{product_measure, Block, Configuration, FiniteMeasure, Label, Space};
pub use rational::Rational;
