//! Mode-directed tabling: a tabled resolution engine whose tables keep only
//! the answers a declared mode prefers.

pub mod cli;
pub mod engine;
pub mod lang;
pub mod modes;
pub mod terms;
pub mod tries;
