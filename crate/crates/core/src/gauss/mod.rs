//! Gauss map of the theta divisor, containment of translates, singular locus
//! and Gauss-fiber probes.

pub mod andreotti_mayer;
pub mod map;
pub mod probes;

pub use andreotti_mayer::{andreotti_mayer_report, AndreottiMayerClaim};
pub use map::{canonical_projective, classify, gauss_sample, same_projective_class, Gates, GaussSample, PointClass};
pub use probes::{
    containment_check, fiber_rank_probe, gauss_point, product_preimages, same_point_set, section_jacobian_rank,
    singular_locus_probe, ClassCounts, Factor, FiberProbeReport, Probe, SingularMethod, SingularPoint,
    SingularProbeReport,
};
