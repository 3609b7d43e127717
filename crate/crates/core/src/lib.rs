//! Symbolic computation with splittings of groups: graphs of finite and
//! free-abelian groups, Bass-Serre words, groups of twists, trees of
//! cylinders, deformation-space moves, and finiteness criteria for outer
//! automorphism groups.

pub mod abelian;
pub mod criteria;
pub mod cylinders;
pub mod finite;
pub mod format;
pub mod gog;
pub mod iso;
pub mod moves;
pub mod report;
pub mod subtree;
pub mod twists;
pub mod words;

pub use gog::GraphOfGroups;
