//! Theta functions, section bases, base loci and the pullback decomposition.

pub mod ambient;
pub mod base_locus;
pub mod decomposition;
pub mod eval;
pub mod multiplicity;
pub mod sections;

pub use ambient::{factor_sections, random_point, AmbientTheta, FactorSections};
pub use base_locus::{base_locus, base_locus_finite, BaseLocus, BasePoint};
pub use decomposition::{decomposition_fit, DecompositionFit};
pub use eval::{automorphy_exponent, riemann_theta, ThetaCharacteristic, ThetaEvaluator, ThetaValue, DEFAULT_EPS};
pub use multiplicity::{multiplicity_two_probe, MultiplicityProbe, DEFAULT_MULTIPLICITY_TOL};
pub use sections::{section_basis, SectionBasis};
