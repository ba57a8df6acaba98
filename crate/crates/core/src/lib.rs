//! Parametric verification of component-based systems described by
//! inductive architecture specifications.
//!
//! The pipeline parses a `.pas` file ([`dsl`]), normalizes its rewriting
//! system ([`normalize`]), unfolds bounded instances ([`rewriting`]), checks
//! them by brute force ([`oracle`]) and compiles the parametric safety
//! condition to WSκS ([`wsks`]).

pub mod component;
pub mod dsl;
pub mod node;
pub mod system;
pub mod term;
pub mod normalize;
pub mod rewriting;
pub mod pipeline;
pub mod corpus;
pub mod oracle;
pub mod automata;
pub mod wsks;
pub mod crosscheck;
