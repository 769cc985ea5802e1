//! Decision machinery for pairs of linearly growing outer automorphisms of a
//! free group: either suitable powers commute, witnessed by a common
//! refinement of the associated Bass-Serre trees, or suitable powers generate
//! a free group of rank two, witnessed by incompatible length-function
//! combinatorics plus ping-pong style evidence.
//!
//! The crate is organized around the objects of that dichotomy:
//!
//! - [`words`]: free-group words, cyclic words, and automorphism arithmetic.
//! - [`stallings`]: folded subgroup graphs for membership and rewriting.
//! - [`graphs`]: filtered graphs and upper-triangular homotopy equivalences.
//! - [`gog`]: graphs of groups, groupoid normal forms, translation lengths,
//!   and Dehn twists.
//! - [`folding`]: the pipeline turning a linearly growing upper-triangular
//!   representative into an efficient Dehn twist, and the common-refinement
//!   construction.
//! - [`interaction`]: the edge-twist digraph and the incompatibility search.
//! - [`dichotomy`]: constants, certificates, and the decision driver.

pub mod dichotomy;
pub mod gog;
pub mod error;
pub mod fixtures;
pub mod folding;
pub mod graphs;
pub mod stallings;
pub mod words;
