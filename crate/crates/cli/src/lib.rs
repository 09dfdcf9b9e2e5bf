//! Command-line front end for the torsep library: text formats for
//! endomorphisms, words, and mapping-torus elements, plus the subcommand
//! implementations.

pub mod commands;
pub mod parse;
