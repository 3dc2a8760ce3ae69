//! Malle-type invariants, explicit power-saving bounds and generating
//! Dirichlet series for counting abelian extensions of Q, together with a
//! brute-force class-field-theory oracle and a Tauberian laboratory.

pub mod arith;
pub mod cli;
pub mod error;
pub mod group;
pub mod hp;
pub mod invariants;
pub mod oracle;
pub mod rat;
pub mod series;
pub mod tauberian;
pub mod theta;

pub use error::{LabError, Result};
pub use group::{AbelianGroup, GroupElement, Subgroup, SubgroupLattice};
