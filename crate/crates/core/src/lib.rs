//! Measure how hard a language is to compile by sampling programs from its
//! context-free grammar and counting how many a real compiler accepts.
//!
//! The pipeline: parse a grammar file ([`grammar`]), compile it to a regular
//! tree grammar with named constructors ([`treegrammar`]), enumerate and
//! unrank derivation trees by constructor count ([`enumerator`]), draw
//! size-stratified samples ([`sampler`]), push them through a compiler
//! ([`harness`]), and turn the verdicts into CQ/LCQ reports ([`metrics`],
//! [`report`]).

pub mod config;
pub mod enumerator;
pub mod grammar;
pub mod harness;
pub mod metrics;
pub mod oracle;
pub mod report;
pub mod sampler;
pub mod treegrammar;
