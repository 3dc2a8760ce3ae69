//! Brute-force ground truth over Q: abelian extensions as tuples of Dirichlet
//! characters, discriminants by the conductor-discriminant formula.

pub mod characters;
pub mod count;

pub use characters::{
    characters_up_to, unit_group_structure, DirichletCharacter, LocalComponent, Turn, UnitGroup,
};
pub use count::{count_surjections, CountReport, Ordering};
