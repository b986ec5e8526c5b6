//! A tableau decision procedure for the multi-agent epistemic logic with
//! common and distributed knowledge, with witness extraction and an
//! independent model-checking oracle.

pub mod cli;
pub mod formula;
pub mod hintikka;
pub mod model;
pub mod relation;
pub mod tableau;
