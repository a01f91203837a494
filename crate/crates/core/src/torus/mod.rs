//! Complex tori, polarizations, products, isogeny quotients and scenarios.

pub mod gauge;
pub mod ops;
pub mod polarized;
pub mod scenario;

pub use gauge::Gauge;
pub use ops::{
    annihilator_subspace, build_product, moduli_dimension, quotient_by_kernel, random_tau, seeded_rng, Annihilator,
    Quotient,
};
pub use polarized::{check_riemann_relations, normalized_period_matrix, ComplexTorus, PolarizedTorus, RiemannCheck};
pub use scenario::{
    admissible_kernel_count, build_complementary_example, build_complementary_example_with_kernel, check_parameters,
    control_example, e8_complex_structure, e8_form, e8_scenario, e8_scenario_from_structure, e8_scenario_with_form,
    product_example, E8Construction, Scenario, ScenarioKind, Split, SubtorusEmbedding, E8_FORM, E8_V_BASIS,
};
