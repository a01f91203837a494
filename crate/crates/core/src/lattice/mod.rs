//! Exact integer lattice algebra.

pub mod complex_structure;
pub mod form;
pub mod matrix;
pub mod smith;
pub mod subspace;
pub mod torsion;

pub use complex_structure::{
    find_complex_structure, find_complex_structure_with, preserves_span, verify_complex_structure,
    StructureConstraints, DEFAULT_ENTRY_BOUND,
};
pub use form::{
    frobenius_normal_form, is_antisymmetric, paired_elementary_divisors, restrict_form, IntAlternatingForm,
    PolarizationType, UnimodularChange,
};
pub use matrix::IntMatrix;
pub use smith::{smith_normal_form, SmithForm};
pub use subspace::{generated_subspace, GeneratedSubspace};
pub use torsion::{
    enumerate_graph_isotropic, is_graph, is_isotropic, k_group_generators, point_order, weil_pairing, CombinedPairing,
    FiniteSubgroup, TorsionPoint,
};
